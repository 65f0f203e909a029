//! Deterministic generator for census-style tabular data.
//!
//! Produces rows in the classic 14-attribute census-income layout (see
//! [`crate::data::adult_format`]) with a dependency structure modeled on the
//! real data: income rises with education, hours, age and marriage; men are
//! both more often married and directly advantaged, so an unmitigated model
//! learns a gender gap; the relationship field (Husband/Wife) is a strong
//! income driver and doubles as a gender proxy. A configurable fraction of
//! rows carries "?" markers in the columns that have them in the real data.
//!
//! Useful for demos, tests, and CI environments where the real census files
//! are not available. Everything is a pure function of the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub seed: u64,
    /// Fraction of rows that receive a "?" in workclass/occupation or
    /// native-country (mirrors the real files' missing-value pattern).
    pub missing_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rows: 12_000,
            seed: 42,
            missing_rate: 0.05,
        }
    }
}

const EDUCATION_NAMES: [&str; 16] = [
    "Preschool",
    "1st-4th",
    "5th-6th",
    "7th-8th",
    "9th",
    "10th",
    "11th",
    "12th",
    "HS-grad",
    "Some-college",
    "Assoc-voc",
    "Assoc-acdm",
    "Bachelors",
    "Masters",
    "Prof-school",
    "Doctorate",
];

// cumulative weights for education-num 1..=16, roughly census-shaped
const EDUCATION_WEIGHTS: [f64; 16] = [
    0.002, 0.006, 0.012, 0.022, 0.038, 0.065, 0.10, 0.115, 0.435, 0.655, 0.70, 0.735, 0.90, 0.955,
    0.975, 1.0,
];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut draw = rng.random::<f64>() * total;
    for (name, w) in items {
        draw -= w;
        if draw <= 0.0 {
            return name;
        }
    }
    items.last().expect("non-empty").0
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Generate `rows` records of 15 fields (14 attributes + income label).
pub fn generate(config: &SynthConfig) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let age_dist = Normal::<f64>::new(38.6, 13.2).expect("valid");
    let hours_noise = Normal::<f64>::new(0.0, 8.5).expect("valid");
    let score_noise = Normal::<f64>::new(0.0, 1.0).expect("valid");

    let mut out = Vec::with_capacity(config.rows);
    for _ in 0..config.rows {
        let male = rng.random::<f64>() < 0.67;
        let age = age_dist.sample(&mut rng).clamp(17.0, 90.0).round();

        // marriage odds rise with age and are much higher for men, as in
        // the source data where Husband alone is ~40% of rows
        let married_logit = 0.05 * (age - 35.0) + if male { 0.15 } else { -0.90 };
        let married = rng.random::<f64>() < sigmoid(married_logit);

        let relationship = if married {
            // role labels are almost but not perfectly sex-locked, so the
            // sex column cannot silently stand in for the role columns
            let swapped = rng.random::<f64>() < 0.06;
            if male != swapped {
                "Husband"
            } else {
                "Wife"
            }
        } else if age < 25.0 {
            pick(
                &mut rng,
                &[("Own-child", 0.7), ("Not-in-family", 0.2), ("Unmarried", 0.1)],
            )
        } else {
            pick(
                &mut rng,
                &[
                    ("Not-in-family", 0.55),
                    ("Unmarried", 0.3),
                    ("Other-relative", 0.15),
                ],
            )
        };
        let marital_status = if married {
            pick(
                &mut rng,
                &[
                    ("Married-civ-spouse", 0.88),
                    ("Married-spouse-absent", 0.08),
                    ("Married-AF-spouse", 0.04),
                ],
            )
        } else if age < 30.0 {
            pick(&mut rng, &[("Never-married", 0.9), ("Divorced", 0.1)])
        } else {
            pick(
                &mut rng,
                &[
                    ("Never-married", 0.45),
                    ("Divorced", 0.35),
                    ("Separated", 0.1),
                    ("Widowed", 0.1),
                ],
            )
        };

        // a professional-cluster latent: career women are rarer than
        // career men overall, but the women who do cross the income line
        // are concentrated in this unambiguous cluster
        let career = !male && rng.random::<f64>() < 0.10;

        let education_num = if career {
            pick(
                &mut rng,
                &[("14", 0.3), ("15", 0.45), ("16", 0.25)],
            )
            .parse::<f64>()
            .expect("numeric")
        } else {
            let edu_draw = rng.random::<f64>();
            EDUCATION_WEIGHTS
                .iter()
                .position(|w| edu_draw <= *w)
                .unwrap_or(15) as f64
                + 1.0
        };
        let education = EDUCATION_NAMES[education_num as usize - 1];

        let occupation = if career {
            pick(
                &mut rng,
                &[("Prof-specialty", 0.55), ("Exec-managerial", 0.45)],
            )
        } else if education_num >= 13.0 {
            pick(
                &mut rng,
                &[
                    ("Prof-specialty", 0.42),
                    ("Exec-managerial", 0.33),
                    ("Tech-support", 0.1),
                    ("Sales", 0.1),
                    ("Adm-clerical", 0.05),
                ],
            )
        } else if education_num >= 9.0 {
            pick(
                &mut rng,
                &[
                    ("Craft-repair", 0.16),
                    ("Adm-clerical", 0.17),
                    ("Sales", 0.15),
                    ("Exec-managerial", 0.1),
                    ("Other-service", 0.12),
                    ("Transport-moving", 0.08),
                    ("Machine-op-inspct", 0.08),
                    ("Protective-serv", 0.04),
                    ("Tech-support", 0.05),
                ],
            )
        } else {
            pick(
                &mut rng,
                &[
                    ("Handlers-cleaners", 0.25),
                    ("Machine-op-inspct", 0.25),
                    ("Other-service", 0.25),
                    ("Farming-fishing", 0.15),
                    ("Priv-house-serv", 0.1),
                ],
            )
        };
        let occupation_tier: f64 = match occupation {
            "Prof-specialty" | "Exec-managerial" => 1.0,
            "Tech-support" | "Sales" | "Protective-serv" | "Craft-repair" => 0.4,
            "Adm-clerical" | "Transport-moving" | "Machine-op-inspct" => 0.2,
            _ => 0.0,
        };

        let workclass = pick(
            &mut rng,
            &[
                ("Private", 0.75),
                ("Self-emp-not-inc", 0.08),
                ("Local-gov", 0.06),
                ("State-gov", 0.04),
                ("Self-emp-inc", 0.035),
                ("Federal-gov", 0.03),
                ("Without-pay", 0.005),
            ],
        );
        let race = pick(
            &mut rng,
            &[
                ("White", 0.854),
                ("Black", 0.096),
                ("Asian-Pac-Islander", 0.031),
                ("Amer-Indian-Eskimo", 0.011),
                ("Other", 0.008),
            ],
        );
        let native_country = pick(
            &mut rng,
            &[
                ("United-States", 0.90),
                ("Mexico", 0.025),
                ("Philippines", 0.015),
                ("Germany", 0.012),
                ("Canada", 0.012),
                ("India", 0.011),
                ("England", 0.01),
                ("Cuba", 0.008),
                ("Jamaica", 0.007),
            ],
        );

        let hours = (40.0
            + 2.5 * f64::from(married)
            + 8.0 * f64::from(career)
            + 0.5 * (education_num - 10.0)
            + hours_noise.sample(&mut rng))
        .clamp(1.0, 99.0)
        .round();

        let gain_p = 0.05 + 0.03 * f64::from(education_num >= 13.0);
        let capital_gain = if rng.random::<f64>() < gain_p {
            (Normal::<f64>::new(8.6, 1.1).expect("valid").sample(&mut rng))
                .exp()
                .clamp(114.0, 99_999.0)
                .round()
        } else {
            0.0
        };
        let capital_loss = if rng.random::<f64>() < 0.047 {
            (Normal::<f64>::new(7.5, 0.35).expect("valid").sample(&mut rng))
                .exp()
                .clamp(155.0, 4_356.0)
                .round()
        } else {
            0.0
        };
        let fnlwgt = (Normal::<f64>::new(11.9, 0.5).expect("valid").sample(&mut rng))
            .exp()
            .clamp(19_000.0, 1_200_000.0)
            .round();

        // latent income score: household role dominates (spouses up,
        // dependents down), education second, plus a direct gender advantage
        let role_effect = match relationship {
            "Husband" | "Wife" => 1.2,
            "Own-child" => -1.2,
            "Other-relative" => -0.5,
            "Unmarried" => -0.1,
            _ => 0.0,
        };
        let score = role_effect
            + 1.50 * f64::from(career)
            + 0.85 * (education_num - 9.5) / 2.6
            + 1.00 * f64::from(male)
            + 0.35 * ((age.min(55.0) - 38.0) / 13.0)
            + 0.3 * ((hours - 40.0) / 10.0)
            + 0.55 * occupation_tier
            + 1.2 * f64::from(capital_gain > 0.0)
            + 0.1 * f64::from(race == "White")
            + score_noise.sample(&mut rng);
        let income = if score > 3.3 { ">50K" } else { "<=50K" };

        // missing markers follow the real pattern: workclass+occupation
        // together, or native-country alone
        let (workclass, occupation, native_country) =
            if rng.random::<f64>() < config.missing_rate {
                if rng.random::<f64>() < 0.75 {
                    ("?", "?", native_country)
                } else {
                    (workclass, occupation, "?")
                }
            } else {
                (workclass, occupation, native_country)
            };

        out.push(vec![
            format!("{age}"),
            workclass.to_string(),
            format!("{fnlwgt}"),
            education.to_string(),
            format!("{education_num}"),
            marital_status.to_string(),
            occupation.to_string(),
            relationship.to_string(),
            race.to_string(),
            if male { "Male" } else { "Female" }.to_string(),
            format!("{capital_gain}"),
            format!("{capital_loss}"),
            format!("{hours}"),
            native_country.to_string(),
            income.to_string(),
        ]);
    }
    out
}

/// Write generated rows as a headerless CSV in census file layout.
pub fn write_csv(config: &SynthConfig, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in generate(config) {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    crate::fsio::write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{adult_format, encode, fit_schema, load_csv};

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig {
            rows: 50,
            seed: 3,
            missing_rate: 0.1,
        };
        assert_eq!(generate(&config), generate(&config));
        let other = SynthConfig { seed: 4, ..config };
        assert_ne!(generate(&config), generate(&other));
    }

    #[test]
    fn rows_have_census_arity_and_labels() {
        let rows = generate(&SynthConfig {
            rows: 200,
            seed: 1,
            missing_rate: 0.0,
        });
        assert_eq!(rows.len(), 200);
        for row in &rows {
            assert_eq!(row.len(), 15);
            assert!(row[14] == ">50K" || row[14] == "<=50K");
        }
    }

    #[test]
    fn missing_rate_zero_means_no_markers() {
        let rows = generate(&SynthConfig {
            rows: 300,
            seed: 2,
            missing_rate: 0.0,
        });
        assert!(rows.iter().all(|r| r.iter().all(|c| c != "?")));
    }

    #[test]
    fn pipeline_accepts_generated_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synth.csv");
        let config = SynthConfig {
            rows: 2_000,
            seed: 7,
            missing_rate: 0.05,
        };
        write_csv(&config, &path).unwrap();

        let format = adult_format();
        let table = load_csv(&path, &format).unwrap();
        assert!(table.dropped_missing > 0);
        assert!(table.n_rows() > 1_500);

        let schema = fit_schema(&table, "sex", "Male").unwrap();
        assert_eq!(schema.groups.len(), 14);
        let ds = encode(&table, &schema).unwrap();
        assert_eq!(ds.width(), schema.total_width());

        // the generated labels carry a gender gap in the real data's direction
        let (mut m_pos, mut m_tot, mut f_pos, mut f_tot) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..ds.n_rows() {
            if ds.is_privileged_row(i) {
                m_tot += 1.0;
                m_pos += f64::from(ds.label(i));
            } else {
                f_tot += 1.0;
                f_pos += f64::from(ds.label(i));
            }
        }
        let (m_rate, f_rate) = (m_pos / m_tot, f_pos / f_tot);
        assert!(m_rate > f_rate, "male {m_rate} vs female {f_rate}");
        assert!(m_rate > 0.2 && m_rate < 0.45, "male rate {m_rate}");
        assert!(f_rate > 0.03 && f_rate < 0.2, "female rate {f_rate}");
    }
}
