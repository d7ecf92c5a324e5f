use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SOURCE_FILE: &str = "source.txt";
pub const REFERENCE_FILE: &str = "reference.txt";
pub const META_FILE: &str = "meta.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestItem {
    pub source: String,
    pub reference: String,
    pub source_lang: String,
    pub target_lang: String,
}

/// Aligned source, reference and `source_lang<TAB>target_lang` files, one
/// sentence per line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub items: Vec<TestItem>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn check_line(path: &Path, i: usize, text: &str) -> Result<()> {
    if text.contains('\t') || text.contains('\r') {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: "sentence contains a tab or carriage return".into(),
        });
    }
    Ok(())
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::load_files(dir.join(SOURCE_FILE), dir.join(REFERENCE_FILE), dir.join(META_FILE))
    }

    pub fn load_files(source: impl AsRef<Path>, reference: impl AsRef<Path>, meta: impl AsRef<Path>) -> Result<Self> {
        let (sp, rp, mp) = (source.as_ref(), reference.as_ref(), meta.as_ref());
        let (src, rf, mt) = (read(sp)?, read(rp)?, read(mp)?);
        let src: Vec<&str> = src.lines().collect();
        let rf: Vec<&str> = rf.lines().collect();
        let mt: Vec<&str> = mt.lines().collect();
        if src.len() != rf.len() || src.len() != mt.len() {
            return Err(Error::Validation(format!(
                "test set files are not aligned: {} source, {} reference, {} metadata lines",
                src.len(),
                rf.len(),
                mt.len()
            )));
        }
        let mut items = Vec::with_capacity(src.len());
        for (i, ((s, r), m)) in src.iter().zip(&rf).zip(&mt).enumerate() {
            check_line(sp, i, s)?;
            check_line(rp, i, r)?;
            let (sl, tl) = m
                .split_once('\t')
                .filter(|(a, b)| !a.is_empty() && !b.is_empty() && !b.contains('\t'))
                .ok_or_else(|| Error::Parse {
                    path: mp.to_path_buf(),
                    line: i + 1,
                    message: "expected `source_lang<TAB>target_lang`".into(),
                })?;
            items.push(TestItem {
                source: s.to_string(),
                reference: r.to_string(),
                source_lang: sl.to_string(),
                target_lang: tl.to_string(),
            });
        }
        Ok(TestSet { items })
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut src = String::new();
        let mut rf = String::new();
        let mut mt = String::new();
        for it in &self.items {
            src.push_str(&it.source);
            src.push('\n');
            rf.push_str(&it.reference);
            rf.push('\n');
            mt.push_str(&format!("{}\t{}\n", it.source_lang, it.target_lang));
        }
        for (name, body) in [(SOURCE_FILE, src), (REFERENCE_FILE, rf), (META_FILE, mt)] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_misalignment() {
        let dir = tempfile::tempdir().unwrap();
        let set = TestSet {
            items: vec![
                TestItem {
                    source: "a b".into(),
                    reference: "c d".into(),
                    source_lang: "l1".into(),
                    target_lang: "l2".into(),
                },
                TestItem {
                    source: "e".into(),
                    reference: "f".into(),
                    source_lang: "l2".into(),
                    target_lang: "l1".into(),
                },
            ],
        };
        set.save(dir.path()).unwrap();
        assert_eq!(TestSet::load(dir.path()).unwrap(), set);
        std::fs::write(dir.path().join(META_FILE), "l1\tl2\n").unwrap();
        assert!(matches!(TestSet::load(dir.path()), Err(Error::Validation(_))));
        std::fs::write(dir.path().join(META_FILE), "l1\tl2\nbroken\n").unwrap();
        match TestSet::load(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
