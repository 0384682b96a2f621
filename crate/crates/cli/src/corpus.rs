//! Corpus ingestion and manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use plagguard_core::frontend::{MINILANG_EXT, TOKEN_STREAM_EXT};
use plagguard_core::generator::generate_corpus;
use plagguard_core::{tokenize, Language, Program, SourceFile};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{write_file, HarnessError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum Role {
    Original,
    Plagiarism { source: String },
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(flatten)]
    pub role: Role,
    /// Attack recipe or LLM job that produced the program.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    /// Location relative to the manifest's directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<Exclusion>,
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.id.as_str()) {
                return Err(HarnessError::DuplicateProgramId(e.id.clone()));
            }
        }
        for e in &self.entries {
            if let Role::Plagiarism { source } = &e.role {
                let known = self.entries.iter().any(|o| &o.id == source && o.role == Role::Original);
                if !known {
                    return Err(HarnessError::Data(format!(
                        "plagiarism `{}` references unknown original `{source}`",
                        e.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn originals(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.role == Role::Original)
    }
}

/// A corpus held in memory together with its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub programs: Vec<Program>,
}

fn submission_id(path: &Path) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    if path.is_dir() {
        return Some(name.to_string());
    }
    let ext = path.extension()?.to_str()?;
    if ext == MINILANG_EXT || ext == TOKEN_STREAM_EXT {
        path.file_stem()?.to_str().map(str::to_string)
    } else {
        None
    }
}

fn load_submission(id: &str, path: &Path) -> Result<Program, String> {
    let program = if path.is_dir() {
        Program::load_dir(id, path).map_err(|e| e.to_string())?
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        let file = path.file_name().and_then(|n| n.to_str()).unwrap_or("main.ml");
        let language = if path.extension().and_then(|e| e.to_str()) == Some(TOKEN_STREAM_EXT) {
            Language::ImportedTokenStream
        } else {
            Language::Minilang
        };
        Program {
            id: id.to_string(),
            files: vec![SourceFile {
                path: file.to_string(),
                text,
            }],
            language,
        }
    };
    tokenize(&program).map_err(|e| e.to_string())?;
    Ok(program)
}

/// Loads one program from a `.ml` or `.tok` file or a submission directory.
/// The id is the file stem or directory name.
pub fn load_program(path: &Path) -> Result<Program, HarnessError> {
    let id = submission_id(path).ok_or_else(|| {
        HarnessError::Data(format!(
            "{}: expected a directory or a .{MINILANG_EXT}/.{TOKEN_STREAM_EXT} file",
            path.display()
        ))
    })?;
    load_submission(&id, path).map_err(|reason| HarnessError::Data(format!("{}: {reason}", path.display())))
}

/// Reads a submission directory: every subdirectory is one (possibly
/// multi-file) program, every top-level `.ml` or `.tok` file is a
/// single-file program. Submissions that fail to parse are excluded and
/// logged. The directory is never written to.
pub fn ingest_corpus(dir: &Path) -> Result<Corpus, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::io(dir, e))?;
    paths.sort();

    let mut seen = BTreeSet::new();
    let mut corpus = Corpus {
        manifest: CorpusManifest::default(),
        programs: Vec::new(),
    };
    for path in paths {
        let Some(id) = submission_id(&path) else {
            continue;
        };
        if !seen.insert(id.clone()) {
            return Err(HarnessError::DuplicateProgramId(id));
        }
        match load_submission(&id, &path) {
            Ok(program) => {
                corpus.manifest.entries.push(ManifestEntry {
                    id: id.clone(),
                    role: Role::Original,
                    provenance: None,
                    path: path.strip_prefix(dir).unwrap_or(&path).to_string_lossy().into_owned(),
                });
                corpus.programs.push(program);
            }
            Err(reason) => {
                log::warn!("excluding submission `{id}`: {reason}");
                corpus.manifest.excluded.push(Exclusion { id, reason });
            }
        }
    }
    if corpus.programs.is_empty() {
        return Err(HarnessError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(corpus)
}

/// The originals of an experiment: ingested from `corpus.dir`, or generated.
pub fn load_originals(cfg: &ExperimentConfig) -> Result<Corpus, HarnessError> {
    if let Some(dir) = &cfg.corpus.dir {
        return ingest_corpus(dir);
    }
    let programs = generate_corpus(cfg.corpus.programs, cfg.seed, &cfg.corpus.generator);
    let entries = programs
        .iter()
        .map(|p| ManifestEntry {
            id: p.id.clone(),
            role: Role::Original,
            provenance: Some(format!("generator seed {}", cfg.seed)),
            path: format!("{}.{MINILANG_EXT}", p.id),
        })
        .collect();
    Ok(Corpus {
        manifest: CorpusManifest {
            entries,
            excluded: Vec::new(),
        },
        programs,
    })
}

/// Writes every program of `corpus` below `dir` (one `.ml` file per
/// single-file program, one directory per multi-file program) plus
/// `manifest.json`. Manifest paths are rewritten to the written layout.
pub fn persist_corpus(corpus: &Corpus, dir: &Path) -> Result<CorpusManifest, HarnessError> {
    let mut manifest = corpus.manifest.clone();
    for (entry, program) in manifest.entries.iter_mut().zip(&corpus.programs) {
        let ext = match program.language {
            Language::Minilang => MINILANG_EXT,
            Language::ImportedTokenStream => TOKEN_STREAM_EXT,
        };
        if program.files.len() == 1 {
            entry.path = format!("{}.{ext}", program.id);
            write_file(&dir.join(&entry.path), &program.files[0].text)?;
        } else {
            entry.path = program.id.clone();
            for f in &program.files {
                write_file(&dir.join(&program.id).join(&f.path), &f.text)?;
            }
        }
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), &(json + "\n"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plagiarism_must_reference_an_original() {
        let entry = |id: &str, role: Role| ManifestEntry {
            id: id.into(),
            role,
            provenance: None,
            path: format!("{id}.ml"),
        };
        let mut m = CorpusManifest {
            entries: vec![
                entry("a", Role::Original),
                entry("b", Role::Plagiarism { source: "a".into() }),
            ],
            excluded: Vec::new(),
        };
        m.validate().unwrap();
        m.entries.push(entry("c", Role::Plagiarism { source: "zz".into() }));
        assert!(m.validate().is_err());
        m.entries.pop();
        m.entries.push(entry("a", Role::Generated));
        assert!(matches!(m.validate(), Err(HarnessError::DuplicateProgramId(_))));
    }

    #[test]
    fn manifest_json_shape() {
        let e = ManifestEntry {
            id: "p_ins".into(),
            role: Role::Plagiarism { source: "p".into() },
            provenance: Some("insertion_exhaustive seed 3".into()),
            path: "p_ins.ml".into(),
        };
        let json = serde_json::to_string(&e).unwrap();
        assert_eq!(
            json,
            r#"{"id":"p_ins","role":"plagiarism","source":"p","provenance":"insertion_exhaustive seed 3","path":"p_ins.ml"}"#
        );
        assert_eq!(serde_json::from_str::<ManifestEntry>(&json).unwrap(), e);
    }
}
