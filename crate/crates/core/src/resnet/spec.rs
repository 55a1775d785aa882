use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{ResnetError, Result};

/// The architecture table shipped with the crate, for a 5-class output.
pub const ARCHITECTURE_CSV: &str = include_str!("../../data/resnet34_architecture.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum LayerKind {
    InputLayer,
    Conv1D,
    BatchNorm,
    Scale,
    Activation,
    Dropout,
    MaxPooling1D,
    Add,
    Flatten,
    Dense,
}

impl LayerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::InputLayer => "InputLayer",
            LayerKind::Conv1D => "Conv1D",
            LayerKind::BatchNorm => "BatchNorm",
            LayerKind::Scale => "Scale",
            LayerKind::Activation => "Activation",
            LayerKind::Dropout => "Dropout",
            LayerKind::MaxPooling1D => "MaxPooling1D",
            LayerKind::Add => "Add",
            LayerKind::Flatten => "Flatten",
            LayerKind::Dense => "Dense",
        }
    }
}

/// One row of the architecture table.
///
/// `channels` is 0 for the flat rows (flatten, dense), whose length is
/// carried in `width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub width: usize,
    pub channels: usize,
    pub params: usize,
    pub inputs: Vec<String>,
    pub kernel_size: Option<usize>,
    pub use_bias: bool,
}

#[derive(Deserialize)]
struct Row {
    layer_name: String,
    layer_type: LayerKind,
    width: usize,
    channels: usize,
    params: usize,
    input_layer_names: String,
    kernel_size: Option<usize>,
    use_bias: Option<u8>,
}

/// Ordered layer table; every row's inputs appear earlier in the table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureSpec {
    layers: Vec<LayerSpec>,
}

impl ArchitectureSpec {
    /// The shipped 34-layer table with a dense head of `num_classes`.
    pub fn resnet34(num_classes: usize) -> Result<ArchitectureSpec> {
        if !(num_classes == 5 || num_classes == 6) {
            return Err(ResnetError::UnsupportedClassCount(num_classes));
        }
        ArchitectureSpec::from_csv(ARCHITECTURE_CSV)?.with_classes(num_classes)
    }

    pub fn from_csv(text: &str) -> Result<ArchitectureSpec> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut layers = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| ResnetError::InvalidSpec(e.to_string()))?;
            let inputs = row
                .input_layer_names
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            layers.push(LayerSpec {
                name: row.layer_name,
                kind: row.layer_type,
                width: row.width,
                channels: row.channels,
                params: row.params,
                inputs,
                kernel_size: row.kernel_size,
                use_bias: row.use_bias == Some(1),
            });
        }
        let spec = ArchitectureSpec { layers };
        spec.input_indices()?;
        Ok(spec)
    }

    /// Same table with the dense row resized to `num_classes` outputs.
    pub fn with_classes(mut self, num_classes: usize) -> Result<ArchitectureSpec> {
        let dense = self
            .layers
            .iter()
            .rposition(|l| l.kind == LayerKind::Dense)
            .ok_or_else(|| ResnetError::InvalidSpec("no dense layer".into()))?;
        let fan_in = self.layers[dense].params / self.layers[dense].width.max(1) - 1;
        self.layers[dense].width = num_classes;
        self.layers[dense].params = (fan_in + 1) * num_classes;
        Ok(self)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.width)
    }

    /// Resolves each row's input names to earlier row indices.
    pub fn input_indices(&self) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut idx = Vec::new();
            for name in &layer.inputs {
                let j = self.layers[..i]
                    .iter()
                    .position(|l| &l.name == name)
                    .ok_or_else(|| {
                        ResnetError::InvalidSpec(format!("{} reads {name}, which is not an earlier layer", layer.name))
                    })?;
                idx.push(j);
            }
            let expected = match layer.kind {
                LayerKind::InputLayer => 0,
                LayerKind::Add => 2,
                _ => 1,
            };
            if idx.len() != expected {
                return Err(ResnetError::InvalidSpec(format!(
                    "{} has {} inputs, expected {expected}",
                    layer.name,
                    idx.len()
                )));
            }
            out.push(idx);
        }
        if self.layers.first().map(|l| l.kind) != Some(LayerKind::InputLayer)
            || self.layers.last().map(|l| l.kind) != Some(LayerKind::Dense)
        {
            return Err(ResnetError::InvalidSpec("table must run from an input layer to a dense layer".into()));
        }
        Ok(out)
    }

    /// `(kernel > 1 convolutions, kernel-1 shortcut convolutions)`.
    pub fn conv_counts(&self) -> (usize, usize) {
        let convs = self.layers.iter().filter(|l| l.kind == LayerKind::Conv1D);
        convs.fold((0, 0), |(body, short), l| match l.kernel_size {
            Some(1) => (body, short + 1),
            _ => (body + 1, short),
        })
    }

    pub fn total_params(&self) -> usize {
        self.layers.iter().map(|l| l.params).sum()
    }

    /// SHA-256 over a canonical rendering of the rows.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for l in &self.layers {
            h.update(
                format!(
                    "{}|{}|{}|{}|{}|{}|{}|{}\n",
                    l.name,
                    l.kind.as_str(),
                    l.width,
                    l.channels,
                    l.params,
                    l.inputs.join(","),
                    l.kernel_size.map_or(String::new(), |k| k.to_string()),
                    u8::from(l.use_bias)
                )
                .as_bytes(),
            );
        }
        h.update(format!("classes={}", self.num_classes()).as_bytes());
        h.finalize().into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shape() {
        let spec = ArchitectureSpec::resnet34(5).unwrap();
        assert_eq!(spec.layers().len(), 206);
        assert_eq!(spec.conv_counts(), (33, 8));
        assert_eq!(spec.total_params(), 17_569_349);
        assert_eq!(spec.input_width(), 3000);
        let count = |k| spec.layers().iter().filter(|l| l.kind == k).count();
        assert_eq!(count(LayerKind::BatchNorm), 33);
        assert_eq!(count(LayerKind::Add), 16);
        assert_eq!(count(LayerKind::MaxPooling1D), 16);
        assert_eq!(count(LayerKind::Dropout), 31);
    }

    #[test]
    fn six_classes_resize_only_the_head() {
        let five = ArchitectureSpec::resnet34(5).unwrap();
        let six = ArchitectureSpec::resnet34(6).unwrap();
        assert_eq!(six.layers().last().unwrap().params, 33798);
        assert_eq!(five.layers()[..205], six.layers()[..205]);
        assert_ne!(five.fingerprint(), six.fingerprint());
        assert!(ArchitectureSpec::resnet34(4).is_err());
    }

    #[test]
    fn forward_references_are_rejected() {
        let csv = "layer_name,layer_type,width,channels,params,input_layer_names,kernel_size,use_bias\n\
                   input_1,InputLayer,4,1,0,,,\n\
                   act,Activation,4,1,0,later,,\n\
                   later,Dense,2,0,10,act,,\n";
        assert!(matches!(ArchitectureSpec::from_csv(csv), Err(ResnetError::InvalidSpec(_))));
    }
}
