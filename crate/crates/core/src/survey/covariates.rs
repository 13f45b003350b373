//! Static respondent covariates and their category labels.
//!
//! Codes are 1-based; code 1 is the reference category of every regression.

pub const AGE_GROUPS: [&str; 6] = ["15-24", "25-34", "35-44", "45-54", "55-64", "65-79"];
pub const GENDERS: [&str; 2] = ["Man", "Woman"];
pub const INCOME_GROUPS: [&str; 5] = ["<30k", "30k-50k", "50k-70k", "70k+", "unknown"];
pub const REGIONS: [&str; 4] = [
    "Helsinki-Uusimaa",
    "Southern",
    "Western",
    "Northern and Eastern",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Covariates {
    pub agegr: u8,
    pub gender: u8,
    pub incomegr: u8,
    pub region: u8,
}

impl Covariates {
    /// Reference individual: 15-24, man, lowest income, Helsinki-Uusimaa.
    pub const REFERENCE: Covariates = Covariates {
        agegr: 1,
        gender: 1,
        incomegr: 1,
        region: 1,
    };

    pub fn new(agegr: u8, gender: u8, incomegr: u8, region: u8) -> Option<Self> {
        let ok = (1..=AGE_GROUPS.len() as u8).contains(&agegr)
            && (1..=GENDERS.len() as u8).contains(&gender)
            && (1..=INCOME_GROUPS.len() as u8).contains(&incomegr)
            && (1..=REGIONS.len() as u8).contains(&region);
        ok.then_some(Self {
            agegr,
            gender,
            incomegr,
            region,
        })
    }

    pub fn agegr_label(&self) -> &'static str {
        AGE_GROUPS[self.agegr as usize - 1]
    }
}

fn normalize(s: &str) -> String {
    s.trim()
        .to_ascii_lowercase()
        .replace(['–', '—'], "-")
        .replace(' ', "")
}

fn numeric_code(raw: &str, max: usize) -> Option<u8> {
    raw.trim()
        .parse::<u8>()
        .ok()
        .filter(|c| (1..=max as u8).contains(c))
}

pub fn parse_agegr(raw: &str) -> Option<u8> {
    numeric_code(raw, AGE_GROUPS.len()).or_else(|| {
        let n = normalize(raw).replace("years", "").replace('y', "");
        AGE_GROUPS.iter().position(|l| *l == n).map(|i| i as u8 + 1)
    })
}

pub fn parse_gender(raw: &str) -> Option<u8> {
    numeric_code(raw, GENDERS.len()).or_else(|| match normalize(raw).as_str() {
        "m" | "man" | "male" => Some(1),
        "f" | "w" | "woman" | "female" => Some(2),
        _ => None,
    })
}

pub fn parse_incomegr(raw: &str) -> Option<u8> {
    numeric_code(raw, INCOME_GROUPS.len()).or_else(|| match normalize(raw).as_str() {
        "<30k" | "0-30k" | "<=30k" => Some(1),
        "30-50k" | "30k-50k" => Some(2),
        "50-70k" | "50k-70k" => Some(3),
        "70k+" | ">70k" | "70k-" => Some(4),
        "unknown" | "n/a" | "na" | "noanswer" => Some(5),
        _ => None,
    })
}

pub fn parse_region(raw: &str) -> Option<u8> {
    numeric_code(raw, REGIONS.len()).or_else(|| match normalize(raw).as_str() {
        "helsinki-uusimaa" | "helsinki" | "uusimaa" => Some(1),
        "southern" | "southernfinland" => Some(2),
        "western" | "westernfinland" => Some(3),
        "northernandeastern"
        | "easternandnorthern"
        | "northern&eastern"
        | "eastern&northern"
        | "northernandeasternfinland" => Some(4),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_codes_agree() {
        for (i, l) in AGE_GROUPS.iter().enumerate() {
            assert_eq!(parse_agegr(l), Some(i as u8 + 1));
        }
        for (i, l) in INCOME_GROUPS.iter().enumerate() {
            assert_eq!(parse_incomegr(l), Some(i as u8 + 1));
        }
        for (i, l) in REGIONS.iter().enumerate() {
            assert_eq!(parse_region(l), Some(i as u8 + 1));
        }
        assert_eq!(parse_gender("M"), Some(1));
        assert_eq!(parse_gender("Woman"), Some(2));
        assert_eq!(parse_agegr("4"), Some(4));
        assert_eq!(parse_incomegr("30-50k"), Some(2));
    }

    #[test]
    fn out_of_range_rejected() {
        assert_eq!(parse_agegr("7"), None);
        assert_eq!(parse_agegr("0"), None);
        assert_eq!(parse_gender("3"), None);
        assert_eq!(parse_region("Lapland"), None);
        assert!(Covariates::new(1, 1, 6, 1).is_none());
        assert!(Covariates::new(6, 2, 5, 4).is_some());
    }
}
