//! Strict validation of language-model JSON responses.

use serde_json::Value;

use super::ParseError;

fn parse_object(raw: &str) -> Result<serde_json::Map<String, Value>, ParseError> {
    let value: Value =
        serde_json::from_str(raw).map_err(|e| ParseError::Json(e.to_string()))?;
    match value {
        Value::Object(map) => Ok(map),
        other => Err(ParseError::Json(format!(
            "expected a JSON object, got {other}"
        ))),
    }
}

fn check_keys(map: &serde_json::Map<String, Value>, expected: &[&str]) -> Result<(), ParseError> {
    let mut got: Vec<String> = map.keys().cloned().collect();
    got.sort();
    let mut want: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
    want.sort();
    if got != want {
        return Err(ParseError::WrongKeys {
            expected: want.join(", "),
            got: got.join(", "),
        });
    }
    Ok(())
}

fn numeric_array(
    map: &serde_json::Map<String, Value>,
    key: &str,
    d: usize,
) -> Result<Vec<f64>, ParseError> {
    let arr = map
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| ParseError::Json(format!("key `{key}` must hold an array")))?;
    if arr.len() != d {
        return Err(ParseError::WrongLength {
            key: key.to_string(),
            expected: d,
            got: arr.len(),
        });
    }
    arr.iter()
        .map(|v| {
            v.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseError::Json(format!("key `{key}` must hold finite numbers")))
        })
        .collect()
}

fn check_range(key: &str, values: &[f64], min: f64, max: f64) -> Result<(), ParseError> {
    for (index, &value) in values.iter().enumerate() {
        if value < min || value > max {
            return Err(ParseError::OutOfRange {
                key: key.to_string(),
                index,
                value,
                min,
                max,
            });
        }
    }
    Ok(())
}

/// Parse an attention response: an object with the single key `gate` holding
/// `d` values in `[0, 1]`.
pub fn parse_att_response(raw: &str, d: usize) -> Result<Vec<f64>, ParseError> {
    let map = parse_object(raw)?;
    check_keys(&map, &["gate"])?;
    let gate = numeric_array(&map, "gate", d)?;
    check_range("gate", &gate, 0.0, 1.0)?;
    Ok(gate)
}

/// Parse a preference response: an object with exactly the keys `mu` and
/// `confidence`. Shifts are signed with `|mu| <= 6`; confidence lies in
/// `[0, 1]`.
pub fn parse_pref_response(raw: &str, d: usize) -> Result<(Vec<f64>, Vec<f64>), ParseError> {
    let map = parse_object(raw)?;
    check_keys(&map, &["mu", "confidence"])?;
    let mu = numeric_array(&map, "mu", d)?;
    check_range("mu", &mu, -6.0, 6.0)?;
    let confidence = numeric_array(&map, "confidence", d)?;
    check_range("confidence", &confidence, 0.0, 1.0)?;
    Ok((mu, confidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_well_formed_gate() {
        let gate = parse_att_response(r#"{"gate":[0.0,1.0,0.0,1.0]}"#, 4).unwrap();
        assert_eq!(gate, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_wrong_gate_length() {
        assert!(matches!(
            parse_att_response(r#"{"gate":[0,1]}"#, 4),
            Err(ParseError::WrongLength { .. })
        ));
    }

    #[test]
    fn rejects_extra_keys() {
        assert!(matches!(
            parse_att_response(r#"{"gate":[0,1,0,1],"extra":1}"#, 4),
            Err(ParseError::WrongKeys { .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_gate() {
        assert!(matches!(
            parse_att_response(r#"{"gate":[0,1,0,1.5]}"#, 4),
            Err(ParseError::OutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(matches!(
            parse_att_response("gate: [0,1]", 2),
            Err(ParseError::Json(_))
        ));
    }

    #[test]
    fn parses_well_formed_preference() {
        let (mu, m) =
            parse_pref_response(r#"{"mu":[0,0,0,4.0],"confidence":[0,0,0,0.9]}"#, 4).unwrap();
        assert_eq!(mu, vec![0.0, 0.0, 0.0, 4.0]);
        assert_eq!(m, vec![0.0, 0.0, 0.0, 0.9]);
    }

    #[test]
    fn accepts_signed_mu_within_six() {
        let (mu, _) = parse_pref_response(r#"{"mu":[-6.0],"confidence":[0.5]}"#, 1).unwrap();
        assert_eq!(mu, vec![-6.0]);
        assert!(matches!(
            parse_pref_response(r#"{"mu":[6.5],"confidence":[0.5]}"#, 1),
            Err(ParseError::OutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_confidence_out_of_range() {
        assert!(matches!(
            parse_pref_response(r#"{"mu":[1.0],"confidence":[1.3]}"#, 1),
            Err(ParseError::OutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_missing_confidence() {
        assert!(matches!(
            parse_pref_response(r#"{"mu":[1.0]}"#, 1),
            Err(ParseError::WrongKeys { .. })
        ));
    }
}
