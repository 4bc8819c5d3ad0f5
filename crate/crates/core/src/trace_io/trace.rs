use std::collections::HashMap;
use std::io::{Read, Write};

use super::{parse_err, record_line, InputError};
use crate::model::{TenantClass, WorkloadTrace};

/// Reads a `slot,class,requests` CSV. Every class in `classes` needs a row
/// for every slot from 1 to the largest slot present.
pub fn load_trace<R: Read>(
    reader: R,
    classes: &[TenantClass],
    slot_hours: f64,
) -> Result<WorkloadTrace, InputError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["slot", "class", "requests"] {
        return parse_err(1, format!("expected header slot,class,requests, got {}", headers.iter().collect::<Vec<_>>().join(",")));
    }

    let index: HashMap<u32, usize> = classes.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    let mut cells: Vec<HashMap<usize, u64>> = vec![HashMap::new(); classes.len()];
    let mut tau = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = record_line(&rec);
        let slot: usize = match rec[0].parse() {
            Ok(s) if s >= 1 => s,
            _ => return parse_err(line, format!("slot {:?} is not a positive integer", &rec[0])),
        };
        let Ok(class) = rec[1].parse::<u32>() else {
            return parse_err(line, format!("class {:?} is not a class id", &rec[1]));
        };
        let Some(&i) = index.get(&class) else {
            return parse_err(line, format!("class {class} is not declared in the scenario"));
        };
        let raw = &rec[2];
        if raw.starts_with('-') || raw.starts_with('\u{2212}') {
            return parse_err(line, format!("negative request count {raw}"));
        }
        let Ok(requests) = raw.parse::<u64>() else {
            return parse_err(line, format!("request count {raw:?} is not a non-negative integer"));
        };
        if cells[i].insert(slot - 1, requests).is_some() {
            return parse_err(line, format!("duplicate row for class {class} slot {slot}"));
        }
        tau = tau.max(slot);
    }
    if tau == 0 {
        return Err(InputError::Invalid("trace has no rows".into()));
    }

    let mut lambda = Vec::with_capacity(classes.len());
    for (class, row) in classes.iter().zip(&cells) {
        let mut series = Vec::with_capacity(tau);
        for t in 0..tau {
            match row.get(&t) {
                Some(&v) => series.push(v),
                None => {
                    return Err(InputError::Invalid(format!(
                        "gap: no row for class {} at slot {}",
                        class.id,
                        t + 1
                    )))
                }
            }
        }
        lambda.push(series);
    }
    Ok(WorkloadTrace::new(slot_hours, classes.to_vec(), lambda)?)
}

/// Writes a trace sorted by slot, then by class order.
pub fn write_trace<W: Write>(writer: W, trace: &WorkloadTrace) -> Result<(), InputError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["slot", "class", "requests"])?;
    for t in 0..trace.tau() {
        for (i, class) in trace.classes().iter().enumerate() {
            w.write_record([
                (t + 1).to_string(),
                class.id.to_string(),
                trace.lambda()[i][t].to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Kappa;

    fn classes() -> Vec<TenantClass> {
        vec![
            TenantClass::new(1, Kappa::Inelastic),
            TenantClass::new(2, Kappa::Finite(0.1)),
        ]
    }

    #[test]
    fn two_by_two_round_trip() {
        let text = "slot,class,requests\n1,1,10\n2,1,0\n1,2,5\n2,2,7\n";
        let trace = load_trace(text.as_bytes(), &classes(), 1.0).unwrap();
        assert_eq!(trace.lambda(), &[vec![10, 0], vec![5, 7]]);
        let mut out = Vec::new();
        write_trace(&mut out, &trace).unwrap();
        let again = load_trace(out.as_slice(), &classes(), 1.0).unwrap();
        assert_eq!(again, trace);
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "slot,class,requests\n1,1,10\n1,2,5\n2,1,0\n2,2,7\n"
        );
    }

    #[test]
    fn negative_count_names_the_line() {
        let text = "slot,class,requests\n1,1,10\n1,2,-3\n";
        let err = load_trace(text.as_bytes(), &classes(), 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("negative"), "{msg}");
        let unicode = "slot,class,requests\n1,1,\u{2212}3\n";
        assert!(load_trace(unicode.as_bytes(), &classes(), 1.0)
            .unwrap_err()
            .to_string()
            .contains("negative"));
    }

    #[test]
    fn missing_slot_is_a_gap() {
        let text = "slot,class,requests\n1,1,1\n2,1,1\n3,1,1\n1,2,1\n3,2,1\n";
        let err = load_trace(text.as_bytes(), &classes(), 1.0).unwrap_err();
        assert!(err.to_string().contains("gap: no row for class 2 at slot 2"), "{err}");
    }

    #[test]
    fn duplicates_unknown_classes_and_bad_headers() {
        let dup = "slot,class,requests\n1,1,1\n1,1,2\n1,2,0\n";
        assert!(load_trace(dup.as_bytes(), &classes(), 1.0).unwrap_err().to_string().contains("duplicate"));
        let unknown = "slot,class,requests\n1,9,1\n";
        assert!(load_trace(unknown.as_bytes(), &classes(), 1.0).unwrap_err().to_string().contains("not declared"));
        let header = "t,class,requests\n1,1,1\n";
        assert!(load_trace(header.as_bytes(), &classes(), 1.0).is_err());
        let ragged = "slot,class,requests\n1,1\n";
        assert!(matches!(load_trace(ragged.as_bytes(), &classes(), 1.0), Err(InputError::Csv(_))));
        let zero = "slot,class,requests\n0,1,1\n";
        assert!(load_trace(zero.as_bytes(), &classes(), 1.0).is_err());
    }

    #[test]
    fn rows_may_arrive_in_any_order() {
        let text = "slot,class,requests\n2,2,7\n 1 , 2 , 5 \n2,1,0\n1,1,10\n";
        let trace = load_trace(text.as_bytes(), &classes(), 1.0).unwrap();
        assert_eq!(trace.lambda(), &[vec![10, 0], vec![5, 7]]);
    }
}
