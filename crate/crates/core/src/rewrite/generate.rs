use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::config::MppSoCConfig;
use crate::kv;

use super::{apply_to_file, plan_actions, RewriteAction, RewriteError, TemplateFile, TemplateKind};

/// Where template files are read from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TemplateSource {
    /// The library compiled into this crate.
    #[default]
    Bundled,
    /// A directory holding the five template files.
    Dir(PathBuf),
}

impl TemplateSource {
    pub fn load(&self, kind: TemplateKind) -> Result<TemplateFile, GenError> {
        let text = match self {
            TemplateSource::Bundled => kind.bundled_text().to_string(),
            TemplateSource::Dir(dir) => {
                let path = dir.join(kind.file_name());
                match fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => {
                        return Err(GenError::TemplateMissing(path));
                    }
                    Err(source) => return Err(GenError::Io { path, source }),
                }
            }
        };
        Ok(TemplateFile::from_text(kind.file_name(), &text))
    }

    /// Writes the bundled library into `dir`.
    pub fn export_bundled(dir: &Path) -> Result<(), GenError> {
        fs::create_dir_all(dir).map_err(|source| GenError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for kind in TemplateKind::ALL {
            let path = dir.join(kind.file_name());
            fs::write(&path, kind.bundled_text())
                .map_err(|source| GenError::Io { path, source })?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("template {} not found", .0.display())]
    TemplateMissing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error("{}:{line}: `{text}` is not a 32-bit hexadecimal word", path.display())]
    BadImageWord {
        path: PathBuf,
        line: usize,
        text: String,
    },
    #[error("{}: {words} words do not fit a {capacity}-word memory", path.display())]
    ImageTooLarge {
        path: PathBuf,
        words: u64,
        capacity: u64,
    },
}

/// One output file held in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub kind: TemplateKind,
    pub text: String,
    /// Lines selected by at least one action.
    pub lines_rewritten: usize,
    pub actions: Vec<RewriteAction>,
}

impl RenderedFile {
    pub fn file_name(&self) -> &'static str {
        self.kind.file_name()
    }

    pub fn line_count(&self) -> usize {
        self.text.lines().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenReport {
    pub files: Vec<String>,
    pub files_written: usize,
    pub lines_generated: usize,
    pub lines_rewritten: usize,
    pub elapsed: Duration,
}

impl GenReport {
    fn from_rendered(files: &[RenderedFile], elapsed: Duration) -> Self {
        GenReport {
            files: files.iter().map(|f| f.file_name().to_string()).collect(),
            files_written: files.len(),
            lines_generated: files.iter().map(RenderedFile::line_count).sum(),
            lines_rewritten: files.iter().map(|f| f.lines_rewritten).sum(),
            elapsed,
        }
    }

    /// Machine-readable dump. Elapsed time is left out so the dump is
    /// reproducible.
    pub fn to_kv(&self) -> String {
        let mut w = kv::Writer::new();
        w.put("report", "generate")
            .put("files_written", self.files_written)
            .put("lines_generated", self.lines_generated)
            .put("lines_rewritten", self.lines_rewritten);
        for f in &self.files {
            w.put("file", f);
        }
        w.finish()
    }

    pub fn from_kv(text: &str) -> Option<Self> {
        let mut report = GenReport {
            files: Vec::new(),
            files_written: 0,
            lines_generated: 0,
            lines_rewritten: 0,
            elapsed: Duration::ZERO,
        };
        let mut kind_seen = false;
        for e in kv::parse(text).ok()? {
            match e.key {
                "report" => kind_seen = e.value == "generate",
                "files_written" => report.files_written = e.value.parse().ok()?,
                "lines_generated" => report.lines_generated = e.value.parse().ok()?,
                "lines_rewritten" => report.lines_rewritten = e.value.parse().ok()?,
                "file" => report.files.push(e.value.to_string()),
                _ => return None,
            }
        }
        kind_seen.then_some(report)
    }
}

impl fmt::Display for GenReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "generated {} files, {} lines ({} rewritten)",
            self.files_written, self.lines_generated, self.lines_rewritten
        )?;
        for name in &self.files {
            writeln!(f, "  {name}")?;
        }
        Ok(())
    }
}

fn parse_hex_word(text: &str) -> Option<u32> {
    let digits = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    if digits.is_empty() || digits.len() > 8 {
        return None;
    }
    u32::from_str_radix(digits, 16).ok()
}

/// Reads a memory image (one hex word per line, `#` comments) and checks it
/// fits `capacity` words. Returns the word count.
pub fn check_memory_image(path: &Path, capacity: u64) -> Result<u64, GenError> {
    let text = fs::read_to_string(path).map_err(|source| GenError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut words = 0u64;
    for (idx, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if parse_hex_word(body).is_none() {
            return Err(GenError::BadImageWord {
                path: path.to_path_buf(),
                line: idx + 1,
                text: body.to_string(),
            });
        }
        words += 1;
    }
    if words > capacity {
        return Err(GenError::ImageTooLarge {
            path: path.to_path_buf(),
            words,
            capacity,
        });
    }
    Ok(words)
}

/// Produces every output file in memory without touching the output
/// directory. Relative `mem_init` paths are checked against `base_dir`.
pub fn render(
    config: &MppSoCConfig,
    source: &TemplateSource,
    base_dir: &Path,
) -> Result<Vec<RenderedFile>, GenError> {
    if let Some(image) = &config.mem_init {
        let capacity = config.acu_geometry().words.min(config.pe_geometry().words);
        check_memory_image(&base_dir.join(image), capacity)?;
    }
    let plan = plan_actions(config);
    let mut out = Vec::with_capacity(TemplateKind::ALL.len());
    for kind in TemplateKind::ALL {
        let template = source.load(kind)?;
        let actions: Vec<RewriteAction> = plan
            .iter()
            .filter(|p| p.file == kind)
            .map(|p| p.action.clone())
            .collect();
        let rewritten = apply_to_file(&template, &actions)?;
        out.push(RenderedFile {
            kind,
            text: rewritten.file.to_text(),
            lines_rewritten: rewritten.matched_lines.len(),
            actions,
        });
    }
    Ok(out)
}

/// Generates the full file set into `out_dir`, resolving a relative
/// `mem_init` against the working directory.
pub fn generate(
    config: &MppSoCConfig,
    source: &TemplateSource,
    out_dir: &Path,
) -> Result<GenReport, GenError> {
    generate_in(config, source, out_dir, Path::new("."))
}

/// [`generate`] with relative `mem_init` paths resolved against `base_dir`.
///
/// All files are rendered before anything is written, so `out_dir` may be
/// the template directory itself.
pub fn generate_in(
    config: &MppSoCConfig,
    source: &TemplateSource,
    out_dir: &Path,
    base_dir: &Path,
) -> Result<GenReport, GenError> {
    let start = Instant::now();
    let files = render(config, source, base_dir)?;
    fs::create_dir_all(out_dir).map_err(|source| GenError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    for f in &files {
        let path = out_dir.join(f.file_name());
        fs::write(&path, &f.text).map_err(|source| GenError::Io { path, source })?;
    }
    Ok(GenReport::from_rendered(&files, start.elapsed()))
}

/// Report for a dry run: what [`generate`] would write.
pub fn dry_run_report(files: &[RenderedFile], elapsed: Duration) -> GenReport {
    GenReport::from_rendered(files, elapsed)
}
