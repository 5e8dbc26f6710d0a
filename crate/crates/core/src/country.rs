//! The 18 country-level dialects covered by the toolkit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Country codes in the canonical corpus order (Gulf and Iraq/Yemen
/// first, then the Levant, the Nile valley and the Maghreb).
///
/// `PL` is used for Palestine, as in the published corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Country {
    IQ,
    BH,
    KW,
    SA,
    AE,
    OM,
    QA,
    YE,
    SY,
    JO,
    PL,
    LB,
    EG,
    SD,
    LY,
    TN,
    DZ,
    MA,
}

impl Country {
    pub const ALL: [Country; 18] = [
        Country::IQ,
        Country::BH,
        Country::KW,
        Country::SA,
        Country::AE,
        Country::OM,
        Country::QA,
        Country::YE,
        Country::SY,
        Country::JO,
        Country::PL,
        Country::LB,
        Country::EG,
        Country::SD,
        Country::LY,
        Country::TN,
        Country::DZ,
        Country::MA,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Country::IQ => "IQ",
            Country::BH => "BH",
            Country::KW => "KW",
            Country::SA => "SA",
            Country::AE => "AE",
            Country::OM => "OM",
            Country::QA => "QA",
            Country::YE => "YE",
            Country::SY => "SY",
            Country::JO => "JO",
            Country::PL => "PL",
            Country::LB => "LB",
            Country::EG => "EG",
            Country::SD => "SD",
            Country::LY => "LY",
            Country::TN => "TN",
            Country::DZ => "DZ",
            Country::MA => "MA",
        }
    }

    pub fn from_code(code: &str) -> Option<Country> {
        Country::ALL.into_iter().find(|c| c.code() == code)
    }

    /// Position in [`Country::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported country code `{0}`")]
pub struct UnknownCountry(pub String);

impl FromStr for Country {
    type Err = UnknownCountry;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Country::from_code(s).ok_or_else(|| UnknownCountry(s.to_string()))
    }
}

impl Serialize for Country {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Country {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
