use super::{NnError, Result, Tensor};

/// Max pooling with size 2 and stride 2.
///
/// Output width is `floor(width / 2)`; a trailing odd sample is dropped.
/// Returns the flat input index of each winner (ties go to the earlier
/// position).
pub fn maxpool_forward(x: &Tensor) -> Result<(Tensor, Vec<u32>)> {
    let (width, channels) = x.shape();
    if width < 2 {
        return Err(NnError::WidthTooSmall(width));
    }
    let out_width = width / 2;
    let src = x.as_slice();
    let mut out = Vec::with_capacity(out_width * channels);
    let mut argmax = Vec::with_capacity(out_width * channels);
    for t in 0..out_width {
        let a = 2 * t * channels;
        let b = a + channels;
        for c in 0..channels {
            let (ia, ib) = (a + c, b + c);
            let winner = if src[ib] > src[ia] { ib } else { ia };
            out.push(src[winner]);
            argmax.push(winner as u32);
        }
    }
    Ok((Tensor::new(out_width, channels, out)?, argmax))
}

/// Routes `grad_y` back to the winning input positions.
pub fn maxpool_backward(argmax: &[u32], grad_y: &Tensor, input_width: usize) -> Result<Tensor> {
    if argmax.len() != grad_y.as_slice().len() || input_width / 2 != grad_y.width() {
        return Err(NnError::ShapeMismatch(format!(
            "{} winners for grad {:?} from input width {input_width}",
            argmax.len(),
            grad_y.shape()
        )));
    }
    let mut gx = Tensor::zeros(input_width, grad_y.channels());
    let dst = gx.as_mut_slice();
    for (&idx, &g) in argmax.iter().zip(grad_y.as_slice()) {
        dst[idx as usize] += g;
    }
    Ok(gx)
}
