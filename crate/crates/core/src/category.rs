//! Bug taxonomy leaves and the static fix-strategy table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Group {
    /// Backend compilation.
    A,
    /// WASI robustness.
    B,
    /// Runtime environment.
    C,
}

impl Group {
    pub fn title(self) -> &'static str {
        match self {
            Group::A => "Backend Compilation",
            Group::B => "WASI Robustness",
            Group::C => "Runtime Environment",
        }
    }

    fn letter(self) -> char {
        match self {
            Group::A => 'A',
            Group::B => 'B',
            Group::C => 'C',
        }
    }
}

macro_rules! categories {
    ($( $variant:ident = ($group:ident, $n:literal, $name:literal, $detector:literal); )*) => {
        /// Leaf category of the runtime bug taxonomy.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Category { $($variant),* }

        impl Category {
            pub const ALL: &'static [Category] = &[$(Category::$variant),*];

            pub fn group(self) -> Group {
                match self { $(Category::$variant => Group::$group),* }
            }

            pub fn number(self) -> u8 {
                match self { $(Category::$variant => $n),* }
            }

            pub fn name(self) -> &'static str {
                match self { $(Category::$variant => $name),* }
            }

            /// Whether the builtin corpus ships a detector for this leaf.
            pub fn detector_backed(self) -> bool {
                match self { $(Category::$variant => $detector),* }
            }
        }
    };
}

categories! {
    A1 = (A, 1, "Incompatible infrastructure version", false);
    A2 = (A, 2, "Incorrect compilation", true);
    A3 = (A, 3, "Compilation failure", true);
    A4 = (A, 4, "Register allocation error", true);
    A5 = (A, 5, "Incomplete operating system support", true);
    A6 = (A, 6, "Incomplete hardware support", false);
    A7 = (A, 7, "Unsupported data operation", true);
    A8 = (A, 8, "Validation error", true);
    A9 = (A, 9, "WASM debugging information error", true);
    A10 = (A, 10, "Others", false);
    B1 = (B, 1, "File operation error", true);
    B2 = (B, 2, "Import error", true);
    B3 = (B, 3, "Unsupported operation", true);
    B4 = (B, 4, "Input and output stream error", true);
    B5 = (B, 5, "Operating system support error", true);
    B6 = (B, 6, "WASI version error", false);
    B7 = (B, 7, "Other counterpart error", false);
    B8 = (B, 8, "Clock bugs", false);
    B9 = (B, 9, "Others", false);
    C1 = (C, 1, "Module instantiation faults", true);
    C2 = (C, 2, "Module import error", true);
    C3 = (C, 3, "Calling host functions", true);
    C4 = (C, 4, "Memory issue", true);
    C5 = (C, 5, "Trap error", true);
    C6 = (C, 6, "Unsupported features", false);
    C7 = (C, 7, "Thread safety issue", false);
    C8 = (C, 8, "Stack issue", false);
    C9 = (C, 9, "Entry point error", true);
    C10 = (C, 10, "Unhandled error", true);
    C11 = (C, 11, "Data type conversion", false);
    C12 = (C, 12, "Others", false);
}

/// Matrix row order of the detector-backed leaves.
pub const MATRIX_ROWS: [Category; 19] = [
    Category::A2,
    Category::A3,
    Category::A4,
    Category::A5,
    Category::A7,
    Category::A8,
    Category::A9,
    Category::B1,
    Category::B2,
    Category::B3,
    Category::B4,
    Category::B5,
    Category::C1,
    Category::C2,
    Category::C3,
    Category::C4,
    Category::C5,
    Category::C9,
    Category::C10,
];

impl Category {
    /// Short id such as `B.1`.
    pub fn id(self) -> String {
        format!("{}.{}", self.group().letter(), self.number())
    }

    /// `[B.1] File operation error`
    pub fn label(self) -> String {
        format!("[{}] {}", self.id(), self.name())
    }

    pub fn detector_backed_set() -> impl Iterator<Item = Category> {
        Category::ALL.iter().copied().filter(|c| c.detector_backed())
    }

    pub fn fix_hints(self) -> Vec<&'static FixStrategy> {
        FIX_STRATEGIES.iter().filter(|s| s.categories.contains(&self)).collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category `{0}` (expected an id such as `B.1`)")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Accepts `B.1`, `b.1`, `B1`, and `[B.1]`.
    fn from_str(s: &str) -> Result<Category, UnknownCategory> {
        let err = || UnknownCategory(s.to_string());
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let mut chars = t.chars();
        let group = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => Group::A,
            Some('B') => Group::B,
            Some('C') => Group::C,
            _ => return Err(err()),
        };
        let rest = chars.as_str();
        let rest = rest.strip_prefix('.').unwrap_or(rest);
        let n: u8 = rest.parse().map_err(|_| err())?;
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.group() == group && c.number() == n)
            .ok_or_else(err)
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Category, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A category-level fix strategy and how often it applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixStrategy {
    pub name: &'static str,
    pub group: Group,
    pub frequency: &'static str,
    #[serde(skip)]
    pub categories: &'static [Category],
}

use Category::*;

/// Ordered by frequency within each group.
pub static FIX_STRATEGIES: &[FixStrategy] = &[
    FixStrategy {
        name: "fix compilation rules",
        group: Group::A,
        frequency: "39.6% of Backend Compilation bugs; 71.4% of A.2",
        categories: &[A2, A3],
    },
    FixStrategy {
        name: "fix register allocation",
        group: Group::A,
        frequency: "16.2% of Backend Compilation bugs",
        categories: &[A4],
    },
    FixStrategy {
        name: "fix data operation",
        group: Group::A,
        frequency: "9.0% of Backend Compilation bugs",
        categories: &[A2, A3, A5, A7],
    },
    FixStrategy {
        name: "supplement validation rules",
        group: Group::A,
        frequency: "8.1% of Backend Compilation bugs",
        categories: &[A8],
    },
    FixStrategy {
        name: "fix debug information",
        group: Group::A,
        frequency: "7.2% of Backend Compilation bugs; 87.5% of A.9",
        categories: &[A9],
    },
    FixStrategy {
        name: "eliminate unreasonable operation",
        group: Group::A,
        frequency: "4.5% of Backend Compilation bugs",
        categories: &[],
    },
    FixStrategy {
        name: "add compilation functionality for SIMD instructions",
        group: Group::A,
        frequency: "3 bugs across A.2 and A.3",
        categories: &[A2, A3],
    },
    FixStrategy {
        name: "using the correct version of the infrastructure",
        group: Group::A,
        frequency: "all of A.1",
        categories: &[A1],
    },
    FixStrategy {
        name: "fix the file operation",
        group: Group::B,
        frequency: "35.6% of WASI Robustness bugs; all of B.1 and half of B.5",
        categories: &[B1, B5],
    },
    FixStrategy {
        name: "fix input and output stream error",
        group: Group::B,
        frequency: "13.3% of WASI Robustness bugs",
        categories: &[B4],
    },
    FixStrategy {
        name: "fix WASI import",
        group: Group::B,
        frequency: "8.9% of WASI Robustness bugs",
        categories: &[B2],
    },
    FixStrategy {
        name: "fix the WASI version",
        group: Group::B,
        frequency: "8.9% of WASI Robustness bugs",
        categories: &[B6],
    },
    FixStrategy {
        name: "fix counterpart error",
        group: Group::B,
        frequency: "6.7% of WASI Robustness bugs",
        categories: &[B7],
    },
    FixStrategy {
        name: "fix clock error",
        group: Group::B,
        frequency: "6.7% of WASI Robustness bugs",
        categories: &[B8],
    },
    FixStrategy {
        name: "supplement features",
        group: Group::B,
        frequency: "used for B.3",
        categories: &[B3],
    },
    FixStrategy {
        name: "fix memory allocation / fix memory leak / fix memory release",
        group: Group::C,
        frequency: "29.4% of Runtime Environment bugs",
        categories: &[C1, C4],
    },
    FixStrategy {
        name: "fix error message",
        group: Group::C,
        frequency: "11.8% of Runtime Environment bugs",
        categories: &[C10],
    },
    FixStrategy {
        name: "complement unimplemented features",
        group: Group::C,
        frequency: "11.8% of Runtime Environment bugs",
        categories: &[C1, C2, C3, C4, C5, C6, C7],
    },
    FixStrategy {
        name: "repair data operation",
        group: Group::C,
        frequency: "8.9% of Runtime Environment bugs; all of C.11",
        categories: &[C11],
    },
    FixStrategy {
        name: "fix trap issue",
        group: Group::C,
        frequency: "7.8% of Runtime Environment bugs",
        categories: &[C5],
    },
    FixStrategy {
        name: "fix parameters and return values for host functions",
        group: Group::C,
        frequency: "25% of C.3",
        categories: &[C3],
    },
    FixStrategy {
        name: "fix entry point detecting",
        group: Group::C,
        frequency: "2.9% of Runtime Environment bugs",
        categories: &[C9],
    },
    FixStrategy {
        name: "fix thread operation",
        group: Group::C,
        frequency: "83.3% of C.7",
        categories: &[C7],
    },
    FixStrategy {
        name: "fix stack operation",
        group: Group::C,
        frequency: "all of C.8",
        categories: &[C8],
    },
];
