use serde::Serialize;
use serde_json::{Map, Value};

use super::Served;
use crate::models::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Features(Vec<f64>),
    /// Exactly one node id per request.
    NodeIds(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: u64,
    pub payload: Payload,
}

#[derive(Serialize)]
struct Response<'a> {
    id: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    posterior: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// One request line. Floats use the shortest representation that reads
/// back to the same `f64`.
pub fn encode_request(req: &Request) -> String {
    let mut obj = Map::new();
    obj.insert("id".into(), Value::from(req.id));
    match &req.payload {
        Payload::Features(x) => obj.insert("features".into(), Value::from(x.clone())),
        Payload::NodeIds(ids) => obj.insert("node_ids".into(), Value::from(ids.clone())),
    };
    Value::Object(obj).to_string()
}

fn parse_request(line: &str) -> Result<Request, (Value, String)> {
    let value: Value = serde_json::from_str(line).map_err(|e| (Value::Null, format!("malformed request: {e}")))?;
    let Value::Object(obj) = value else {
        return Err((Value::Null, "request must be an object".into()));
    };
    let id_value = obj.get("id").cloned().unwrap_or(Value::Null);
    let fail = |msg: &str| Err((id_value.clone(), msg.to_string()));
    let Some(id) = id_value.as_u64() else {
        return fail("`id` must be a non-negative integer");
    };
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "id" | "features" | "node_ids")) {
        return Err((id_value.clone(), format!("unknown field `{k}`")));
    }
    let payload = match (obj.get("features"), obj.get("node_ids")) {
        (Some(Value::Array(xs)), None) => match xs.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>() {
            Some(x) => Payload::Features(x),
            None => return fail("`features` must hold numbers"),
        },
        (None, Some(Value::Array(ids))) => match ids.iter().map(|v| v.as_u64().map(|i| i as usize)).collect::<Option<Vec<usize>>>() {
            Some(ids) if ids.len() == 1 => Payload::NodeIds(ids),
            Some(_) => return fail("`node_ids` must hold exactly one id"),
            None => return fail("`node_ids` must hold non-negative integers"),
        },
        (Some(_), Some(_)) => return fail("give either `features` or `node_ids`, not both"),
        _ => return fail("missing `features` or `node_ids` array"),
    };
    Ok(Request { id, payload })
}

fn answer(model: &Served, payload: &Payload) -> Result<Vec<f64>, String> {
    match (model, payload) {
        (Served::Tabular(m), Payload::Features(x)) => {
            if x.len() != m.input_width() {
                return Err("width mismatch".into());
            }
            let row = ndarray::Array2::from_shape_vec((1, x.len()), x.clone()).map_err(|e| e.to_string())?;
            m.predict_features(&row).map(|p| p.row(0).to_vec()).map_err(|e: ModelError| e.to_string())
        }
        (Served::Graph(all), Payload::NodeIds(ids)) => {
            let i = ids[0];
            if i >= all.nrows() {
                return Err(format!("node id {i} is out of range"));
            }
            Ok(all.row(i).to_vec())
        }
        (Served::Tabular(_), Payload::NodeIds(_)) => Err("this model answers feature queries".into()),
        (Served::Graph(_), Payload::Features(_)) => Err("this model answers node_ids queries".into()),
    }
}

/// Turns one request line into one response line (without the newline).
pub(crate) fn handle_line(model: &Served, line: &str) -> String {
    let (id, result) = match parse_request(line) {
        Ok(req) => (Value::from(req.id), answer(model, &req.payload)),
        Err((id, msg)) => (id, Err(msg)),
    };
    let id = if id.is_u64() { id } else { Value::Null };
    let resp = match &result {
        Ok(p) => Response { id, posterior: Some(p), error: None },
        Err(e) => Response { id, posterior: None, error: Some(e) },
    };
    serde_json::to_string(&resp).expect("response serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Architecture, Hyperparameters, TrainedModel};

    fn uniform(width: usize) -> Served {
        let m = TrainedModel::from_parts(Architecture::LogisticRegression, 2, width, vec![0.0; 2 * (width + 1)], Hyperparameters::tabular(), None).unwrap();
        Served::new(m).unwrap()
    }

    #[test]
    fn wire_format() {
        let m = uniform(3);
        assert_eq!(handle_line(&m, r#"{"id":1,"features":[0.0,1.0,0.5]}"#), r#"{"id":1,"posterior":[0.5,0.5]}"#);
        assert_eq!(handle_line(&m, r#"{"id":1,"features":[0.0,1.0]}"#), r#"{"id":1,"error":"width mismatch"}"#);
        assert!(handle_line(&m, "{not json").starts_with(r#"{"id":null,"error":"malformed request"#));
        assert!(handle_line(&m, r#"{"id":4,"node_ids":[1]}"#).contains("\"error\""));
        assert!(handle_line(&m, r#"{"id":-3,"features":[0,0,0]}"#).starts_with(r#"{"id":null"#));
    }

    #[test]
    fn request_encoding_round_trips() {
        let req = Request { id: 7, payload: Payload::Features(vec![0.1, 1.0 / 3.0, -2.5e-12]) };
        let line = encode_request(&req);
        assert_eq!(parse_request(&line).unwrap(), req);
        assert_eq!(encode_request(&Request { id: 1, payload: Payload::NodeIds(vec![42]) }), r#"{"id":1,"node_ids":[42]}"#);
    }
}
