//! The mppSoC configuration model.
//!
//! A configuration describes one machine: the processor IP and how PEs are
//! derived from it, the PE grid, the ACU and PE data memories, and the two
//! optional communication networks. Configurations are read from and written
//! to a small `key = value` text format:
//!
//! ```text
//! processor = minimips
//! methodology = replication
//! rows = 2
//! cols = 4
//! acu_mem_bytes = 4096
//! pe_mem_bytes = 1024
//! mpnoc = crossbar
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::kv;

/// Data word width of every PE and of the ACU, in bytes.
pub const WORD_BYTES: u64 = 4;

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Keyword used in configuration files.
            pub fn keyword(self) -> &'static str {
                match self {
                    $($name::$variant => $kw),+
                }
            }
        }

        impl FromStr for $name {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s {
                    $($kw => Ok($name::$variant),)+
                    _ => Err(()),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }
    };
}

keyword_enum! {
    /// Processor IP the ACU and PEs are built from. Metadata only.
    Processor { Minimips => "minimips", Mips => "mips", Nios => "nios" }
}

keyword_enum! {
    /// How PEs are assembled from the processor IP.
    Methodology { Reduction => "reduction", Replication => "replication" }
}

keyword_enum! {
    /// Neighbourhood network topology.
    Neighborhood {
        Linear => "linear",
        Ring => "ring",
        Mesh2D => "mesh2d",
        Torus2D => "torus2d",
        Xnet => "xnet",
    }
}

keyword_enum! {
    /// Internal network of the mpNoC global router.
    MpNocKind {
        SharedBus => "sharedbus",
        Crossbar => "crossbar",
        DeltaOmega => "delta-omega",
        DeltaBaseline => "delta-baseline",
        DeltaButterfly => "delta-butterfly",
    }
}

impl Neighborhood {
    pub fn is_one_dimensional(self) -> bool {
        matches!(self, Neighborhood::Linear | Neighborhood::Ring)
    }
}

impl MpNocKind {
    pub fn is_delta(self) -> bool {
        matches!(
            self,
            MpNocKind::DeltaOmega | MpNocKind::DeltaBaseline | MpNocKind::DeltaButterfly
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MppSoCConfig {
    pub processor: Processor,
    pub methodology: Methodology,
    /// PE grid rows (`sl_nb_rows` in the generated package).
    pub rows: u32,
    /// PE grid columns (`sl_nb_column` in the generated package).
    pub cols: u32,
    pub acu_mem_bytes: u64,
    pub pe_mem_bytes: u64,
    pub neighborhood: Option<Neighborhood>,
    pub mpnoc: Option<MpNocKind>,
    /// Memory image referenced by the generated memories' `init_file`.
    pub mem_init: Option<PathBuf>,
}

/// Word count and address width of one memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryGeometry {
    pub words: u64,
    pub addr_width: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("{bytes} bytes is not a positive multiple of the {word_bytes}-byte word")]
    NotDivisible { bytes: u64, word_bytes: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{name}`")]
    UnknownKey { name: String, line: usize },
    #[error("line {line}: bad value `{token}` for `{key}`")]
    BadValue {
        key: String,
        token: String,
        line: usize,
    },
    #[error("line {line}: `{key}` given more than once")]
    DuplicateKey { key: String, line: usize },
    #[error("missing required key `{0}`")]
    MissingRequiredKey(&'static str),
    #[error("no communication network selected: set `neighborhood`, `mpnoc` or both")]
    NoNetworkSelected,
}

impl ConfigError {
    /// Source line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. }
            | ConfigError::UnknownKey { line, .. }
            | ConfigError::BadValue { line, .. }
            | ConfigError::DuplicateKey { line, .. } => Some(*line),
            ConfigError::MissingRequiredKey(_) | ConfigError::NoNetworkSelected => None,
        }
    }
}

/// Computes the word count and address width of a `bytes`-sized memory.
///
/// The address width is never below one bit so a generated address vector is
/// never empty.
pub fn derive_geometry(bytes: u64, word_bytes: u64) -> Result<MemoryGeometry, GeometryError> {
    if word_bytes == 0 || bytes < word_bytes || !bytes.is_multiple_of(word_bytes) {
        return Err(GeometryError::NotDivisible { bytes, word_bytes });
    }
    let words = bytes / word_bytes;
    // ceil(log2(words)) for words >= 1
    let ceil_log2 = u64::BITS - (words - 1).leading_zeros();
    Ok(MemoryGeometry {
        words,
        addr_width: ceil_log2.max(1),
    })
}

const KEYS: &[&str] = &[
    "processor",
    "methodology",
    "rows",
    "cols",
    "acu_mem_bytes",
    "pe_mem_bytes",
    "neighborhood",
    "mpnoc",
    "mem_init",
];

impl MppSoCConfig {
    pub fn pe_count(&self) -> usize {
        self.rows as usize * self.cols as usize
    }

    pub fn acu_geometry(&self) -> MemoryGeometry {
        derive_geometry(self.acu_mem_bytes, WORD_BYTES).expect("checked at construction")
    }

    pub fn pe_geometry(&self) -> MemoryGeometry {
        derive_geometry(self.pe_mem_bytes, WORD_BYTES).expect("checked at construction")
    }

    /// Canonical text form; `parse_config(&c.serialize()) == Ok(c)`.
    pub fn serialize(&self) -> String {
        let mut w = kv::Writer::new();
        w.put("processor", self.processor)
            .put("methodology", self.methodology)
            .put("rows", self.rows)
            .put("cols", self.cols)
            .put("acu_mem_bytes", self.acu_mem_bytes)
            .put("pe_mem_bytes", self.pe_mem_bytes);
        if let Some(n) = self.neighborhood {
            w.put("neighborhood", n);
        }
        if let Some(m) = self.mpnoc {
            w.put("mpnoc", m);
        }
        if let Some(p) = &self.mem_init {
            w.put("mem_init", p.display());
        }
        w.finish()
    }
}

impl FromStr for MppSoCConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_config(s)
    }
}

impl fmt::Display for MppSoCConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

fn bad(key: &str, token: &str, line: usize) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        token: token.to_string(),
        line,
    }
}

fn positive<T: FromStr + PartialOrd + Default>(
    key: &str,
    token: &str,
    line: usize,
) -> Result<T, ConfigError> {
    match token.parse::<T>() {
        Ok(v) if v > T::default() => Ok(v),
        _ => Err(bad(key, token, line)),
    }
}

fn memory_bytes(key: &str, token: &str, line: usize) -> Result<u64, ConfigError> {
    let bytes: u64 = positive(key, token, line)?;
    derive_geometry(bytes, WORD_BYTES).map_err(|_| bad(key, token, line))?;
    Ok(bytes)
}

fn keyword<T: FromStr>(key: &str, token: &str, line: usize) -> Result<T, ConfigError> {
    token.parse::<T>().map_err(|_| bad(key, token, line))
}

fn optional_keyword<T: FromStr>(
    key: &str,
    token: &str,
    line: usize,
) -> Result<Option<T>, ConfigError> {
    if token == "none" {
        Ok(None)
    } else {
        keyword(key, token, line).map(Some)
    }
}

/// Parses a configuration file.
///
/// `rows`, `cols`, `acu_mem_bytes` and `pe_mem_bytes` are required. Memory
/// sizes must be whole multiples of [`WORD_BYTES`]. `processor` defaults to
/// `minimips`, `methodology` to `reduction`. `neighborhood` and `mpnoc` may be
/// omitted (or set to `none`) but not both.
pub fn parse_config(text: &str) -> Result<MppSoCConfig, ConfigError> {
    let entries = kv::parse(text).map_err(|e| ConfigError::Syntax {
        line: e.line,
        text: e.text,
    })?;

    let mut seen: Vec<&str> = Vec::new();
    let mut processor = Processor::Minimips;
    let mut methodology = Methodology::Reduction;
    let mut rows = None;
    let mut cols = None;
    let mut acu_mem_bytes = None;
    let mut pe_mem_bytes = None;
    let mut neighborhood = None;
    let mut mpnoc = None;
    let mut mem_init = None;

    for kv::Entry { line, key, value } in entries {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                name: key.to_string(),
                line,
            });
        }
        if seen.contains(&key) {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
        seen.push(key);
        match key {
            "processor" => processor = keyword(key, value, line)?,
            "methodology" => methodology = keyword(key, value, line)?,
            "rows" => rows = Some(positive::<u32>(key, value, line)?),
            "cols" => cols = Some(positive::<u32>(key, value, line)?),
            "acu_mem_bytes" => acu_mem_bytes = Some(memory_bytes(key, value, line)?),
            "pe_mem_bytes" => pe_mem_bytes = Some(memory_bytes(key, value, line)?),
            "neighborhood" => neighborhood = optional_keyword(key, value, line)?,
            "mpnoc" => mpnoc = optional_keyword(key, value, line)?,
            "mem_init" => {
                if value.contains(|c: char| c.is_whitespace() || c == '"') {
                    return Err(bad(key, value, line));
                }
                mem_init = Some(PathBuf::from(value))
            }
            _ => unreachable!("filtered by KEYS"),
        }
    }

    let config = MppSoCConfig {
        processor,
        methodology,
        rows: rows.ok_or(ConfigError::MissingRequiredKey("rows"))?,
        cols: cols.ok_or(ConfigError::MissingRequiredKey("cols"))?,
        acu_mem_bytes: acu_mem_bytes.ok_or(ConfigError::MissingRequiredKey("acu_mem_bytes"))?,
        pe_mem_bytes: pe_mem_bytes.ok_or(ConfigError::MissingRequiredKey("pe_mem_bytes"))?,
        neighborhood,
        mpnoc,
        mem_init,
    };
    if config.neighborhood.is_none() && config.mpnoc.is_none() {
        return Err(ConfigError::NoNetworkSelected);
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REPLICATION_CROSSBAR: &str =
        "processor=minimips\nmethodology=replication\nrows=2\ncols=4\n\
                               acu_mem_bytes=4096\npe_mem_bytes=1024\nmpnoc=crossbar";

    #[test]
    fn parses_replication_crossbar_machine() {
        let c = parse_config(REPLICATION_CROSSBAR).unwrap();
        assert_eq!(c.pe_count(), 8);
        assert_eq!(c.methodology, Methodology::Replication);
        assert_eq!(c.mpnoc, Some(MpNocKind::Crossbar));
        assert_eq!(c.neighborhood, None);
        assert_eq!((c.acu_mem_bytes, c.pe_mem_bytes), (4096, 1024));
    }

    #[test]
    fn defaults_apply() {
        let c = parse_config(
            "rows=4\ncols=4\nacu_mem_bytes=2048\npe_mem_bytes=600\nneighborhood=torus2d\n",
        )
        .unwrap();
        assert_eq!(c.processor, Processor::Minimips);
        assert_eq!(c.methodology, Methodology::Reduction);
        assert_eq!(
            c.pe_geometry(),
            MemoryGeometry {
                words: 150,
                addr_width: 8
            }
        );
    }

    #[test]
    fn no_network_is_rejected() {
        let err = parse_config("rows=2\ncols=2\nacu_mem_bytes=64\npe_mem_bytes=64\n").unwrap_err();
        assert_eq!(err, ConfigError::NoNetworkSelected);
        let err = parse_config(
            "rows=2\ncols=2\nacu_mem_bytes=64\npe_mem_bytes=64\nmpnoc=none\nneighborhood=none",
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::NoNetworkSelected);
    }

    #[test]
    fn zero_rows_is_bad_value() {
        let err = parse_config("rows=0").unwrap_err();
        assert_eq!(
            err,
            ConfigError::BadValue {
                key: "rows".into(),
                token: "0".into(),
                line: 1
            }
        );
    }

    #[test]
    fn error_cases_carry_lines() {
        let base = "rows=2\ncols=2\nacu_mem_bytes=64\npe_mem_bytes=64\nmpnoc=crossbar\n";
        let e = parse_config(&format!("{base}colour=blue\n")).unwrap_err();
        assert_eq!(
            e,
            ConfigError::UnknownKey {
                name: "colour".into(),
                line: 6
            }
        );
        let e = parse_config(&format!("{base}rows=3\n")).unwrap_err();
        assert_eq!(
            e,
            ConfigError::DuplicateKey {
                key: "rows".into(),
                line: 6
            }
        );
        let e = parse_config(&format!("{base}oops\n")).unwrap_err();
        assert_eq!(e.line(), Some(6));
        let e = parse_config("rows=2\ncols=2\nacu_mem_bytes=64\nmpnoc=crossbar").unwrap_err();
        assert_eq!(e, ConfigError::MissingRequiredKey("pe_mem_bytes"));
        let e = parse_config("rows=2\ncols=2\nacu_mem_bytes=6\npe_mem_bytes=64\nmpnoc=crossbar")
            .unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { ref key, .. } if key == "acu_mem_bytes"));
        let e = parse_config("rows=2\ncols=2\nacu_mem_bytes=64\npe_mem_bytes=64\nmpnoc=Crossbar")
            .unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { ref key, .. } if key == "mpnoc"));
    }

    #[test]
    fn mem_init_must_be_one_token() {
        let base = "rows=2\ncols=2\nacu_mem_bytes=64\npe_mem_bytes=64\nmpnoc=crossbar\n";
        let c = parse_config(&format!("{base}mem_init=images/sum16.hex\n")).unwrap();
        assert_eq!(c.mem_init, Some(PathBuf::from("images/sum16.hex")));
        let e = parse_config(&format!("{base}mem_init=my image.hex\n")).unwrap_err();
        assert!(matches!(e, ConfigError::BadValue { ref key, .. } if key == "mem_init"));
        assert!(parse_config(&format!("{base}mem_init=\"x\"\n")).is_err());
    }

    #[test]
    fn crlf_and_comments() {
        let text = "# 2x4 mesh\r\nrows = 2 \r\ncols=4\r\nacu_mem_bytes=4096\r\npe_mem_bytes=1024 # per PE\r\nneighborhood=mesh2d\r\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.neighborhood, Some(Neighborhood::Mesh2D));
    }

    #[test]
    fn geometry_examples() {
        assert_eq!(
            derive_geometry(4096, 4),
            Ok(MemoryGeometry {
                words: 1024,
                addr_width: 10
            })
        );
        assert_eq!(
            derive_geometry(1024, 4),
            Ok(MemoryGeometry {
                words: 256,
                addr_width: 8
            })
        );
        assert_eq!(
            derive_geometry(4, 4),
            Ok(MemoryGeometry {
                words: 1,
                addr_width: 1
            })
        );
        assert_eq!(
            derive_geometry(12, 4),
            Ok(MemoryGeometry {
                words: 3,
                addr_width: 2
            })
        );
        assert_eq!(
            derive_geometry(10, 4),
            Err(GeometryError::NotDivisible {
                bytes: 10,
                word_bytes: 4
            })
        );
        assert!(derive_geometry(0, 4).is_err());
        assert!(derive_geometry(2, 4).is_err());
    }

    fn arb_config() -> impl Strategy<Value = MppSoCConfig> {
        let nb = prop::option::of(prop::sample::select(Neighborhood::ALL.to_vec()));
        let noc = prop::option::of(prop::sample::select(MpNocKind::ALL.to_vec()));
        (
            prop::sample::select(Processor::ALL.to_vec()),
            prop::sample::select(Methodology::ALL.to_vec()),
            1u32..64,
            1u32..64,
            1u64..100_000,
            1u64..100_000,
            nb,
            noc,
            prop::option::of("[a-z0-9_]{1,12}\\.(hex|mif)"),
        )
            .prop_filter("needs a network", |t| t.6.is_some() || t.7.is_some())
            .prop_map(
                |(processor, methodology, rows, cols, acu, pe, neighborhood, mpnoc, init)| {
                    MppSoCConfig {
                        processor,
                        methodology,
                        rows,
                        cols,
                        acu_mem_bytes: acu * WORD_BYTES,
                        pe_mem_bytes: pe * WORD_BYTES,
                        neighborhood,
                        mpnoc,
                        mem_init: init.map(PathBuf::from),
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn serialize_round_trips(c in arb_config()) {
            prop_assert_eq!(parse_config(&c.serialize()), Ok(c));
        }

        #[test]
        fn geometry_is_monotone_and_covers(a in 1u64..1_000_000, b in 1u64..1_000_000) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let g_lo = derive_geometry(lo * 4, 4).unwrap();
            let g_hi = derive_geometry(hi * 4, 4).unwrap();
            prop_assert!(g_lo.addr_width <= g_hi.addr_width);
            prop_assert!(1u64 << g_hi.addr_width >= g_hi.words);
            prop_assert!(g_hi.addr_width == 1 || 1u64 << (g_hi.addr_width - 1) < g_hi.words);
        }

        #[test]
        fn arbitrary_text_never_panics(s in "[ -~\n#=]{0,200}") {
            let _ = parse_config(&s);
        }
    }
}
