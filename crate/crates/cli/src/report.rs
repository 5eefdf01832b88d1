//! Merges earlier JSON outputs into a comparison table and x-y plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use qcube::numeric::{ln_biguint, ln_rat, to_decimal_string, to_f64, LogCount, Real};
use qcube::oracle::SizeProfile;
use qcube::symbolic::parse_rat;

use crate::{CliError, CliResult};

const DIGITS: usize = 40;

struct Row {
    source: String,
    quantity: String,
    asymptotic: String,
    exact: Option<String>,
    error: Option<f64>,
}

impl Row {
    fn to_json(&self) -> Value {
        json!({"source": self.source, "quantity": self.quantity, "asymptotic": self.asymptotic, "exact": self.exact, "error": self.error})
    }
}

/// One plain-text data file: header comment plus whitespace-separated rows.
struct Plot {
    name: String,
    header: String,
    rows: Vec<Vec<String>>,
}

fn load(p: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: not a qcube JSON output ({e})", p.display())))
}

fn field<'a>(v: &'a Value, path: &[&str]) -> CliResult<&'a Value> {
    let mut cur = v;
    for k in path {
        cur = cur.get(k).ok_or_else(|| CliError::Usage(format!("missing field {}", path.join("."))))?;
    }
    Ok(cur)
}

fn str_field(v: &Value, path: &[&str]) -> CliResult<String> {
    let f = field(v, path)?;
    Ok(f.as_str().map(str::to_string).unwrap_or_else(|| f.to_string()))
}

fn u32_field(v: &Value, path: &[&str]) -> CliResult<u32> {
    field(v, path)?.as_u64().map(|x| x as u32).ok_or_else(|| CliError::Usage(format!("field {} is not an integer", path.join("."))))
}

fn log_count(v: &Value) -> CliResult<Real> {
    Ok(LogCount::from_json(v)?.ln()?)
}

fn fmt(x: &Real) -> String {
    to_decimal_string(x, 20)
}

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

pub fn run(inputs: &[PathBuf], plot_dir: Option<&Path>, as_json: bool) -> CliResult<String> {
    let docs: Vec<(String, Value)> = inputs.iter().map(|p| Ok((p.display().to_string(), load(p)?))).collect::<CliResult<_>>()?;
    let mut profiles: BTreeMap<u32, SizeProfile> = BTreeMap::new();
    for (_, doc) in &docs {
        if doc.get("command").and_then(Value::as_str) == Some("oracle") {
            let p = SizeProfile::from_json(field(doc, &["result", "profile"])?)?;
            profiles.insert(p.d, p);
        }
    }

    let mut rows = Vec::new();
    let mut plots: Vec<Plot> = Vec::new();
    // error against exact, keyed by (kind, d, parameter) and indexed by t
    let mut curves: BTreeMap<(String, u32, String), Vec<(u32, f64)>> = BTreeMap::new();

    for (src, doc) in &docs {
        let cmd = str_field(doc, &["command"])?;
        match cmd.as_str() {
            "oracle" => {
                let p = &profiles[&u32_field(doc, &["params", "d"])?];
                let total = p.total();
                rows.push(Row {
                    source: src.clone(),
                    quantity: format!("ln i(Q_{})", p.d),
                    asymptotic: "-".into(),
                    exact: Some(fmt(&ln_biguint(&total, DIGITS)?)),
                    error: None,
                });
            }
            "count" => {
                let d = u32_field(doc, &["params", "d"])?;
                let t = u32_field(doc, &["params", "t"])?;
                let beta = str_field(doc, &["params", "beta"])?;
                let m: usize = str_field(doc, &["result", "m"])?.parse().map_err(|_| CliError::Usage("bad m".into()))?;
                let exact = profiles.get(&d).filter(|p| m < p.counts.len()).map(|p| ln_biguint(&p.count(m), DIGITS)).transpose()?;
                for (path, key) in [("binomial", "binomial_path"), ("fugacity", "fugacity_path")] {
                    let a = log_count(field(doc, &["result", key])?)?;
                    let err = exact.as_ref().map(|e| to_f64(&(a.clone() - e.clone())));
                    if let Some(e) = err {
                        curves.entry((format!("count_{path}"), d, beta.clone())).or_default().push((t, e.abs()));
                    }
                    rows.push(Row {
                        source: src.clone(),
                        quantity: format!("ln i_{m}(Q_{d}) [{path}, t={t}, β={beta}]"),
                        asymptotic: fmt(&a),
                        exact: exact.as_ref().map(fmt),
                        error: err,
                    });
                }
            }
            "zeta" => {
                let d = u32_field(doc, &["params", "d"])?;
                let t = u32_field(doc, &["params", "t"])?;
                let ls = str_field(doc, &["params", "lambda"])?;
                let lam = parse_rat(&ls)?;
                let a = log_count(field(doc, &["result"])?)?;
                let exact = profiles.get(&d).map(|p| ln_rat(&p.partition_function(&lam), DIGITS)).transpose()?;
                let err = exact.as_ref().map(|e| to_f64(&(a.clone() - e.clone())));
                if let Some(e) = err {
                    curves.entry(("zeta".into(), d, ls.clone())).or_default().push((t, e.abs()));
                }
                rows.push(Row {
                    source: src.clone(),
                    quantity: format!("ln Z(Q_{d}, λ={ls}) [t={t}]"),
                    asymptotic: fmt(&a),
                    exact: exact.as_ref().map(fmt),
                    error: err,
                });
            }
            "clusters" => {
                let d = u32_field(doc, &["params", "d"])?;
                let Some(trunc) = doc.pointer("/result/truncation").and_then(Value::as_array) else { continue };
                let ls = str_field(doc, &["result", "lambda"])?;
                let exact = doc.pointer("/result/exact_log_xi").and_then(Value::as_str).map(str::to_string);
                let mut plot = Plot {
                    name: format!("truncation_error_d{d}_lambda{}.dat", slug(&ls)),
                    header: "# k abs_error next_stratum".into(),
                    rows: Vec::new(),
                };
                for r in trunc {
                    let k = u32_field(r, &["k"])?;
                    let err = r.get("abs_error").and_then(Value::as_f64);
                    rows.push(Row {
                        source: src.clone(),
                        quantity: format!("log Ξ_O(Q_{d}, λ={ls}) [k={k}]"),
                        asymptotic: str_field(r, &["truncated_log_xi"])?,
                        exact: exact.clone(),
                        error: err,
                    });
                    if let Some(e) = err {
                        let next = r.get("next_stratum").and_then(Value::as_f64).map(|x| format!("{x:e}")).unwrap_or_else(|| "nan".into());
                        plot.rows.push(vec![k.to_string(), format!("{e:e}"), next]);
                    }
                }
                if !plot.rows.is_empty() {
                    plots.push(plot);
                }
            }
            "sample" => {
                let d = field(doc, &["result", "d"])?.clone();
                let types = field(doc, &["result", "types"])?.as_array().cloned().unwrap_or_default();
                for t in &types {
                    let label = str_field(t, &["label"])?;
                    let mean = field(t, &["estimate", "mean"])?.as_f64().unwrap_or(f64::NAN);
                    let se = field(t, &["estimate", "se"])?.as_f64().unwrap_or(f64::NAN);
                    let m = t.get("m_t_f64").and_then(Value::as_f64);
                    rows.push(Row {
                        source: src.clone(),
                        quantity: format!("E X[{label}] (d={d})"),
                        asymptotic: m.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into()),
                        exact: Some(format!("{mean:.6} ± {se:.6}")),
                        error: m.map(|x| mean - x),
                    });
                    if let Some(bins) = t.pointer("/poisson/bins").and_then(Value::as_array) {
                        let mut plot = Plot {
                            name: format!("gof_d{d}_{}.dat", slug(&label)),
                            header: "# bin observed expected (bin labels: ".to_string()
                                + &bins.iter().map(|b| str_field(b, &["label"])).collect::<CliResult<Vec<_>>>()?.join(" ")
                                + ")",
                            rows: Vec::new(),
                        };
                        for (i, b) in bins.iter().enumerate() {
                            plot.rows.push(vec![i.to_string(), field(b, &["observed"])?.to_string(), field(b, &["expected"])?.to_string()]);
                        }
                        plots.push(plot);
                    }
                }
            }
            "validate" => {
                for r in field(doc, &["result", "results"])?.as_array().cloned().unwrap_or_default() {
                    rows.push(Row {
                        source: src.clone(),
                        quantity: format!("criterion {}", field(&r, &["id"])?),
                        asymptotic: if field(&r, &["passed"])?.as_bool() == Some(true) { "PASS".into() } else { "FAIL".into() },
                        exact: None,
                        error: None,
                    });
                }
            }
            _ => {}
        }
    }
    for ((kind, d, param), mut pts) in curves {
        pts.sort_by_key(|p| p.0);
        plots.push(Plot {
            name: format!("{kind}_error_d{d}_{}.dat", slug(&param)),
            header: "# t abs_error".into(),
            rows: pts.into_iter().map(|(t, e)| vec![t.to_string(), format!("{e:e}")]).collect(),
        });
    }

    let mut written = Vec::new();
    if let Some(dir) = plot_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for p in &plots {
            let mut s = p.header.clone();
            s.push('\n');
            for r in &p.rows {
                s.push_str(&r.join(" "));
                s.push('\n');
            }
            let path = dir.join(&p.name);
            std::fs::write(&path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            written.push(path.display().to_string());
        }
    }

    if as_json {
        let doc = json!({
            "command": "report",
            "params": {"inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()},
            "result": {
                "rows": rows.iter().map(Row::to_json).collect::<Vec<_>>(),
                "plots": plots.iter().map(|p| p.name.clone()).collect::<Vec<_>>(),
                "written": written,
            },
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("json");
        text.push('\n');
        return Ok(text);
    }
    Ok(table(&rows, &plots))
}

fn table(rows: &[Row], plots: &[Plot]) -> String {
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.source.clone(),
                r.quantity.clone(),
                r.asymptotic.clone(),
                r.exact.clone().unwrap_or_else(|| "-".into()),
                r.error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let head = ["source", "quantity", "value", "exact/observed", "difference"];
    let mut w: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for c in &cells {
        for (i, x) in c.iter().enumerate() {
            w[i] = w[i].max(x.chars().count());
        }
    }
    let line = |xs: &[String]| -> String {
        let parts: Vec<String> = xs.iter().enumerate().map(|(i, x)| format!("{x}{}", " ".repeat(w[i] - x.chars().count()))).collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut s = line(&head.map(String::from));
    let _ = writeln!(s, "|{}|", w.iter().map(|n| "-".repeat(n + 2)).collect::<Vec<_>>().join("|"));
    for c in &cells {
        s.push_str(&line(c));
    }
    if !plots.is_empty() {
        let _ = writeln!(s, "\nplot data: {}", plots.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(", "));
    }
    s
}
