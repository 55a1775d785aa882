use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EdfError, Epoch, RecordingMeta, Result, Subset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "RS_TASK")]
    RsTask,
    #[serde(rename = "SC_TASK")]
    ScTask,
}

/// Patient-independent train/test assignment of recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub task: Task,
    pub train_recordings: Vec<String>,
    pub test_recordings: Vec<String>,
}

impl SplitManifest {
    pub fn from_json(text: &str) -> Result<SplitManifest> {
        let manifest: SplitManifest =
            serde_json::from_str(text).map_err(|e| EdfError::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<SplitManifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EdfError::InvalidManifest(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    pub fn all_recordings(&self) -> impl Iterator<Item = &String> {
        self.train_recordings.iter().chain(&self.test_recordings)
    }

    /// Checks the static invariants using Sleep-EDF recording names.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in self.all_recordings() {
            if !seen.insert(id) {
                return Err(EdfError::InvalidManifest(format!("`{id}` listed twice")));
            }
        }
        let subjects = |ids: &[String]| -> Result<BTreeSet<String>> {
            ids.iter()
                .map(|id| RecordingMeta::from_sleep_edf_name(id).map(|m| m.subject_id))
                .collect()
        };
        let train = subjects(&self.train_recordings)?;
        let test = subjects(&self.test_recordings)?;
        if let Some(s) = train.intersection(&test).next() {
            return Err(EdfError::SubjectLeakage(s.clone()));
        }
        if self.task == Task::ScTask {
            for id in self.all_recordings() {
                if RecordingMeta::from_sleep_edf_name(id)?.subset != Subset::SC {
                    return Err(EdfError::InvalidManifest(format!(
                        "SC_TASK contains non-SC recording `{id}`"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Partitions epochs by recording id according to `manifest`.
///
/// Epochs from recordings the manifest does not mention are left out.
pub fn build_split(epochs: &[Epoch], manifest: &SplitManifest) -> Result<(Vec<Epoch>, Vec<Epoch>)> {
    let train_ids: BTreeSet<&str> = manifest.train_recordings.iter().map(String::as_str).collect();
    let test_ids: BTreeSet<&str> = manifest.test_recordings.iter().map(String::as_str).collect();
    let present: BTreeSet<&str> = epochs.iter().map(|e| e.recording_id.as_str()).collect();
    if let Some(missing) = train_ids.union(&test_ids).find(|id| !present.contains(*id)) {
        return Err(EdfError::UnknownRecordingId(missing.to_string()));
    }

    let mut side_of_subject: BTreeMap<&str, bool> = BTreeMap::new();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for e in epochs {
        let is_train = if train_ids.contains(e.recording_id.as_str()) {
            true
        } else if test_ids.contains(e.recording_id.as_str()) {
            false
        } else {
            continue;
        };
        match side_of_subject.insert(&e.subject_id, is_train) {
            Some(prev) if prev != is_train => {
                return Err(EdfError::SubjectLeakage(e.subject_id.clone()));
            }
            _ => {}
        }
        if is_train {
            train.push(e.clone());
        } else {
            test.push(e.clone());
        }
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(recording: &str) -> Epoch {
        let meta = RecordingMeta::from_sleep_edf_name(recording).unwrap();
        Epoch {
            samples: vec![0.0; 3000],
            label: 0,
            recording_id: meta.recording_id,
            subject_id: meta.subject_id,
            subset: meta.subset,
            position_index: 0,
        }
    }

    fn manifest(task: Task, train: &[&str], test: &[&str]) -> SplitManifest {
        SplitManifest {
            task,
            train_recordings: train.iter().map(|s| s.to_string()).collect(),
            test_recordings: test.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn partitions_by_recording() {
        let epochs: Vec<Epoch> = ["SC4001", "SC4001", "SC4002", "SC4011", "ST7011"]
            .iter()
            .map(|r| epoch(r))
            .collect();
        let m = manifest(Task::ScTask, &["SC4001", "SC4002"], &["SC4011"]);
        m.validate().unwrap();
        let (train, test) = build_split(&epochs, &m).unwrap();
        assert_eq!(train.len(), 3);
        assert_eq!(test.len(), 1);
        let train_ids: BTreeSet<_> = train.iter().map(|e| e.recording_id.clone()).collect();
        let test_ids: BTreeSet<_> = test.iter().map(|e| e.recording_id.clone()).collect();
        assert!(train_ids.is_disjoint(&test_ids));
        let union: BTreeSet<_> = train_ids.union(&test_ids).cloned().collect();
        let expected: BTreeSet<_> = m.all_recordings().cloned().collect();
        assert_eq!(union, expected);
    }

    #[test]
    fn both_nights_of_one_subject_must_stay_together() {
        let epochs = vec![epoch("SC4071"), epoch("SC4072")];
        let m = manifest(Task::ScTask, &["SC4071"], &["SC4072"]);
        assert_eq!(m.validate(), Err(EdfError::SubjectLeakage("SC07".into())));
        assert_eq!(
            build_split(&epochs, &m),
            Err(EdfError::SubjectLeakage("SC07".into()))
        );
    }

    #[test]
    fn manifest_ids_must_exist() {
        let epochs = vec![epoch("SC4001")];
        let m = manifest(Task::ScTask, &["SC4001"], &["SC4011"]);
        assert_eq!(
            build_split(&epochs, &m),
            Err(EdfError::UnknownRecordingId("SC4011".into()))
        );
    }

    #[test]
    fn sc_task_rejects_telemetry() {
        let m = manifest(Task::ScTask, &["SC4001"], &["ST7011"]);
        assert!(matches!(m.validate(), Err(EdfError::InvalidManifest(_))));
        let rs = manifest(Task::RsTask, &["SC4001"], &["ST7011"]);
        rs.validate().unwrap();
    }

    #[test]
    fn json_schema() {
        let text = r#"{"task":"SC_TASK","train_recordings":["SC4001"],"test_recordings":["SC4011"]}"#;
        let m = SplitManifest::from_json(text).unwrap();
        assert_eq!(m.task, Task::ScTask);
        assert_eq!(SplitManifest::from_json(&m.to_json()).unwrap(), m);
        assert!(SplitManifest::from_json("{}").is_err());
    }
}
