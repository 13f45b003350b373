use std::io::{Read, Write};

use super::population::{Individual, SurveyObservation};
use crate::error::{Error, Result};

pub const OBSERVATION_COLUMNS: [&str; 4] = ["s0", "s1", "t", "t_star"];

fn write_header_lines<W: Write>(out: &mut W, header_lines: &[String]) -> Result<()> {
    for line in header_lines {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Survey observations as CSV, states coded 1 for the focal company.
pub fn write_observations<W: Write>(
    out: W,
    data: &[SurveyObservation],
    header_lines: &[String],
) -> Result<()> {
    let mut out = out;
    write_header_lines(&mut out, header_lines)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OBSERVATION_COLUMNS)?;
    for o in data {
        w.write_record([
            (o.s0 as u8).to_string(),
            (o.s1 as u8).to_string(),
            o.t.to_string(),
            o.t_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations<R: Read>(input: R) -> Result<Vec<SurveyObservation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.iter().ne(OBSERVATION_COLUMNS) {
        return Err(Error::MalformedRow {
            row: 1,
            message: format!("expected columns {}", OBSERVATION_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let state = |k: usize| match &rec[k] {
            "1" => Ok(true),
            "0" => Ok(false),
            v => Err(Error::FieldOutOfRange {
                row,
                field: OBSERVATION_COLUMNS[k],
                value: v.to_string(),
            }),
        };
        let time = |k: usize| {
            rec[k]
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite() && (*t > 0.0 || (k == 3 && *t == 0.0)))
                .ok_or_else(|| Error::FieldOutOfRange {
                    row,
                    field: OBSERVATION_COLUMNS[k],
                    value: rec[k].to_string(),
                })
        };
        out.push(SurveyObservation {
            s0: state(0)?,
            s1: state(1)?,
            t: time(2)?,
            t_star: time(3)?,
        });
    }
    Ok(out)
}

/// One row per individual: generating parameters, states, purchase counts
/// around the survey and, when given, the realized CLV.
pub fn write_population<W: Write>(
    out: W,
    population: &[Individual],
    clv: Option<&[f64]>,
    header_lines: &[String],
) -> Result<()> {
    if clv.is_some_and(|c| c.len() != population.len()) {
        return Err(Error::invalid("CLV column does not match the population"));
    }
    let mut out = out;
    write_header_lines(&mut out, header_lines)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "individual",
        "lambda",
        "p",
        "q",
        "initial_focal",
        "current_focal",
        "purchases_before",
        "purchases_after",
    ];
    if clv.is_some() {
        header.push("clv");
    }
    w.write_record(&header)?;
    for (i, ind) in population.iter().enumerate() {
        let mut rec = vec![
            (i + 1).to_string(),
            ind.lambda.to_string(),
            ind.p.to_string(),
            ind.q.to_string(),
            (ind.initial_focal as u8).to_string(),
            (ind.current_focal() as u8).to_string(),
            ind.history.before_survey().len().to_string(),
            ind.history.after_survey().len().to_string(),
        ];
        if let Some(c) = clv {
            rec.push(c[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observations_round_trip() {
        let data = vec![
            SurveyObservation {
                s0: true,
                s1: false,
                t: 2.75,
                t_star: 0.0,
            },
            SurveyObservation {
                s0: false,
                s1: false,
                t: 0.1 + 0.2,
                t_star: 13.0,
            },
        ];
        let mut buf = Vec::new();
        write_observations(&mut buf, &data, &["seed=1".into()]).unwrap();
        assert!(buf.starts_with(b"# seed=1\ns0,s1,t,t_star\n"));
        assert_eq!(read_observations(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_observations("s0,s1,t,t_star\n2,0,1,1\n".as_bytes()).is_err());
        assert!(read_observations("s0,s1,t,t_star\n1,0,0,1\n".as_bytes()).is_err());
        assert!(read_observations("s0,s1,t,t_star\n1,0,1,-1\n".as_bytes()).is_err());
        assert!(read_observations("s0,s1,t\n1,0,1\n".as_bytes()).is_err());
    }
}
