//! Domain model of a Cuckoo Sandbox analysis report and the parser that
//! produces it from the sandbox's JSON output.
//!
//! The parser targets the Cuckoo 2.x report layout: top-level keys `info`,
//! `target`, `signatures`, `behavior.processes[].calls`, `network`, and
//! `dropped`. Everything it does not recognize is kept verbatim in
//! `analysis_meta` as provenance. Parsing is total over missing optional
//! sections: absent sections become empty lists.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Top-level keys the parser maps into the typed model.
const RECOGNIZED_KEYS: &[&str] = &[
    "info",
    "target",
    "signatures",
    "behavior",
    "network",
    "dropped",
];

#[derive(Debug, Error)]
pub enum ReportError {
    /// Input is not JSON, not a JSON object, or contains none of the
    /// recognized report sections.
    #[error("malformed report: {0}")]
    MalformedReport(String),
}

/// A parsed sandbox analysis report.
///
/// `target_meta` and `analysis_meta` are provenance only; the distiller
/// never renders them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxReport {
    pub sample_id: String,
    pub target_meta: BTreeMap<String, Value>,
    pub signatures: Vec<TriggeredSignature>,
    pub processes: Vec<ProcessActivity>,
    pub network: NetworkActivity,
    pub dropped_files: Vec<DroppedFile>,
    pub analysis_meta: BTreeMap<String, Value>,
}

/// A sandbox detection rule that matched during execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggeredSignature {
    pub name: String,
    pub description: String,
    pub severity: u32,
    /// Matched indicators, stringified when the report stores structures.
    pub marks: Vec<String>,
}

/// One process observed during detonation, with its API call trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessActivity {
    pub pid: u32,
    pub process_name: String,
    pub parent_pid: Option<u32>,
    pub command_line: Option<String>,
    /// API calls in report order.
    pub api_calls: Vec<ApiCall>,
}

/// A single monitored API call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCall {
    pub api_name: String,
    pub category: String,
    /// Argument values stringified; non-string values become compact JSON.
    pub arguments: BTreeMap<String, String>,
    pub success: bool,
}

/// Network indicators, deduplicated on ingest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NetworkActivity {
    pub dns_queries: Vec<String>,
    pub http_requests: Vec<HttpRequest>,
    pub contacted_ips: Vec<IpEndpoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HttpRequest {
    pub method: String,
    pub host: String,
    pub path: String,
}

/// A contacted address. `port` 0 means the report listed the host without
/// a port (Cuckoo's `network.hosts`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IpEndpoint {
    pub address: String,
    pub port: u16,
}

/// A file written to disk during detonation. Size and hashes stay in
/// provenance only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFile {
    pub path: String,
    pub file_type: String,
}

impl NetworkActivity {
    pub fn is_empty(&self) -> bool {
        self.dns_queries.is_empty() && self.http_requests.is_empty() && self.contacted_ips.is_empty()
    }
}

/// Parse a raw Cuckoo JSON document into a [`SandboxReport`].
///
/// Unrecognized top-level keys are preserved in `analysis_meta`. The sample
/// id comes from the target's declared hashes (sha256, then md5, then file
/// name); when none is present it falls back to a digest of the raw input,
/// so it is always non-empty.
pub fn parse_report(raw: &str) -> Result<SandboxReport, ReportError> {
    let doc: Value = serde_json::from_str(raw)
        .map_err(|e| ReportError::MalformedReport(format!("not valid JSON: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| ReportError::MalformedReport("top level is not an object".into()))?;

    if !RECOGNIZED_KEYS.iter().any(|k| obj.contains_key(*k)) {
        return Err(ReportError::MalformedReport(
            "no recognized report sections (info, target, signatures, behavior, network, dropped)"
                .into(),
        ));
    }

    let mut analysis_meta = BTreeMap::new();
    if let Some(info) = obj.get("info").and_then(Value::as_object) {
        for (k, v) in info {
            analysis_meta.insert(k.clone(), v.clone());
        }
    }
    for (k, v) in obj {
        if !RECOGNIZED_KEYS.contains(&k.as_str()) {
            analysis_meta.insert(k.clone(), v.clone());
        }
    }

    let mut target_meta = BTreeMap::new();
    if let Some(target) = obj.get("target").and_then(Value::as_object) {
        if let Some(file) = target.get("file").and_then(Value::as_object) {
            for (k, v) in file {
                target_meta.insert(k.clone(), v.clone());
            }
        }
        if let Some(category) = target.get("category") {
            target_meta.insert("category".into(), category.clone());
        }
    }

    let signatures = parse_signatures(obj.get("signatures"));
    let processes = parse_processes(obj.get("behavior"));
    let network = parse_network(obj.get("network"));
    let dropped_files = parse_dropped(obj.get("dropped"), &mut analysis_meta);

    let sample_id = sample_id_from(&target_meta, raw);

    Ok(SandboxReport {
        sample_id,
        target_meta,
        signatures,
        processes,
        network,
        dropped_files,
        analysis_meta,
    })
}

fn sample_id_from(target_meta: &BTreeMap<String, Value>, raw: &str) -> String {
    for key in ["sha256", "md5", "name"] {
        if let Some(id) = target_meta.get(key).and_then(Value::as_str) {
            if !id.is_empty() {
                return id.to_string();
            }
        }
    }
    let digest = Sha256::digest(raw.as_bytes());
    format!("doc-{}", hex::encode(digest))
}

fn parse_signatures(value: Option<&Value>) -> Vec<TriggeredSignature> {
    let Some(items) = value.and_then(Value::as_array) else {
        return Vec::new();
    };
    items
        .iter()
        .filter_map(|item| {
            let obj = item.as_object()?;
            let name = obj.get("name")?.as_str()?.trim();
            if name.is_empty() {
                return None;
            }
            let description = obj
                .get("description")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string();
            let severity = obj
                .get("severity")
                .and_then(Value::as_u64)
                .unwrap_or(0)
                .min(u32::MAX as u64) as u32;
            let marks = obj
                .get("marks")
                .and_then(Value::as_array)
                .map(|marks| marks.iter().map(stringify).collect())
                .unwrap_or_default();
            Some(TriggeredSignature {
                name: name.to_string(),
                description,
                severity,
                marks,
            })
        })
        .collect()
}

fn parse_processes(behavior: Option<&Value>) -> Vec<ProcessActivity> {
    let Some(items) = behavior
        .and_then(|b| b.get("processes"))
        .and_then(Value::as_array)
    else {
        return Vec::new();
    };
    let mut processes: Vec<ProcessActivity> = items
        .iter()
        .filter_map(|item| {
            let obj = item.as_object()?;
            let pid = obj.get("pid").and_then(Value::as_u64)? as u32;
            let process_name = obj
                .get("process_name")
                .or_else(|| obj.get("name"))
                .and_then(Value::as_str)
                .unwrap_or("unknown")
                .to_string();
            let parent_pid = obj
                .get("ppid")
                .or_else(|| obj.get("parent_id"))
                .and_then(Value::as_u64)
                .map(|p| p as u32);
            let command_line = obj
                .get("command_line")
                .and_then(Value::as_str)
                .map(str::to_string);
            let api_calls = obj
                .get("calls")
                .and_then(Value::as_array)
                .map(|calls| calls.iter().filter_map(parse_call).collect())
                .unwrap_or_default();
            Some(ProcessActivity {
                pid,
                process_name,
                parent_pid,
                command_line,
                api_calls,
            })
        })
        .collect();

    // The invariant requires every parent link to resolve; drop links to
    // processes outside the report (e.g. the sandbox agent).
    let pids: HashSet<u32> = processes.iter().map(|p| p.pid).collect();
    for process in &mut processes {
        if let Some(parent) = process.parent_pid {
            if !pids.contains(&parent) {
                process.parent_pid = None;
            }
        }
    }
    processes
}

fn parse_call(value: &Value) -> Option<ApiCall> {
    let obj = value.as_object()?;
    let api_name = obj
        .get("api")
        .or_else(|| obj.get("api_name"))?
        .as_str()?
        .trim();
    if api_name.is_empty() {
        return None;
    }
    let category = obj
        .get("category")
        .and_then(Value::as_str)
        .unwrap_or("uncategorized")
        .to_string();
    let mut arguments = BTreeMap::new();
    match obj.get("arguments") {
        // Cuckoo 2.x: a flat object.
        Some(Value::Object(map)) => {
            for (k, v) in map {
                arguments.insert(k.clone(), stringify(v));
            }
        }
        // Cuckoo 1.x: a list of {name, value} pairs.
        Some(Value::Array(items)) => {
            for item in items {
                if let (Some(name), Some(value)) = (
                    item.get("name").and_then(Value::as_str),
                    item.get("value"),
                ) {
                    arguments.insert(name.to_string(), stringify(value));
                }
            }
        }
        _ => {}
    }
    let success = match obj.get("status") {
        Some(Value::Bool(b)) => *b,
        Some(Value::Number(n)) => n.as_i64() != Some(0),
        _ => true,
    };
    Some(ApiCall {
        api_name: api_name.to_string(),
        category,
        arguments,
        success,
    })
}

fn parse_network(value: Option<&Value>) -> NetworkActivity {
    let Some(obj) = value.and_then(Value::as_object) else {
        return NetworkActivity::default();
    };

    let mut dns_queries = Vec::new();
    let mut seen_dns = HashSet::new();
    if let Some(entries) = obj.get("dns").and_then(Value::as_array) {
        for entry in entries {
            let domain = match entry {
                Value::String(s) => Some(s.clone()),
                Value::Object(map) => map
                    .get("request")
                    .and_then(Value::as_str)
                    .map(str::to_string),
                _ => None,
            };
            if let Some(domain) = domain {
                if !domain.is_empty() && seen_dns.insert(domain.clone()) {
                    dns_queries.push(domain);
                }
            }
        }
    }

    let mut http_requests = Vec::new();
    let mut seen_http = HashSet::new();
    if let Some(entries) = obj.get("http").and_then(Value::as_array) {
        for entry in entries {
            let Some(map) = entry.as_object() else {
                continue;
            };
            let request = HttpRequest {
                method: map
                    .get("method")
                    .and_then(Value::as_str)
                    .unwrap_or("GET")
                    .to_string(),
                host: map
                    .get("host")
                    .and_then(Value::as_str)
                    .unwrap_or_default()
                    .to_string(),
                path: map
                    .get("path")
                    .or_else(|| map.get("uri"))
                    .and_then(Value::as_str)
                    .unwrap_or("/")
                    .to_string(),
            };
            if !request.host.is_empty() && seen_http.insert(request.clone()) {
                http_requests.push(request);
            }
        }
    }

    let mut contacted_ips = Vec::new();
    let mut seen_ips = HashSet::new();
    for key in ["tcp", "udp"] {
        if let Some(entries) = obj.get(key).and_then(Value::as_array) {
            for entry in entries {
                let Some(map) = entry.as_object() else {
                    continue;
                };
                let Some(address) = map.get("dst").and_then(Value::as_str) else {
                    continue;
                };
                let port = map.get("dport").and_then(Value::as_u64).unwrap_or(0) as u16;
                let endpoint = IpEndpoint {
                    address: address.to_string(),
                    port,
                };
                if seen_ips.insert(endpoint.clone()) {
                    contacted_ips.push(endpoint);
                }
            }
        }
    }
    if let Some(hosts) = obj.get("hosts").and_then(Value::as_array) {
        for host in hosts {
            let address = match host {
                Value::String(s) => Some(s.clone()),
                Value::Object(map) => map.get("ip").and_then(Value::as_str).map(str::to_string),
                _ => None,
            };
            if let Some(address) = address {
                let endpoint = IpEndpoint { address, port: 0 };
                if !endpoint.address.is_empty()
                    && !seen_ips.iter().any(|e| e.address == endpoint.address)
                    && seen_ips.insert(endpoint.clone())
                {
                    contacted_ips.push(endpoint);
                }
            }
        }
    }

    NetworkActivity {
        dns_queries,
        http_requests,
        contacted_ips,
    }
}

fn parse_dropped(
    value: Option<&Value>,
    analysis_meta: &mut BTreeMap<String, Value>,
) -> Vec<DroppedFile> {
    let Some(items) = value.and_then(Value::as_array) else {
        return Vec::new();
    };
    // Sizes and hashes are provenance; keep the raw entries there.
    analysis_meta.insert("dropped".into(), Value::Array(items.clone()));
    items
        .iter()
        .filter_map(|item| {
            let obj = item.as_object()?;
            let path = obj
                .get("filepath")
                .or_else(|| obj.get("path"))
                .or_else(|| obj.get("name"))
                .and_then(Value::as_str)?;
            if path.is_empty() {
                return None;
            }
            let file_type = obj
                .get("type")
                .or_else(|| obj.get("filetype"))
                .and_then(Value::as_str)
                .unwrap_or("unknown")
                .to_string();
            Some(DroppedFile {
                path: path.to_string(),
                file_type,
            })
        })
        .collect()
}

fn stringify(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
