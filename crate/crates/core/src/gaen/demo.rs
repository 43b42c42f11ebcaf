//! Reference DKM implementations behind the stdio protocol, used by the
//! `dtg-dkm-demo` executable and the `dtg dkm-demo` subcommand.
//!
//! Modes:
//!   identity <dim>                  outputs = inputs
//!   constant <v1,v2,...> [--table k] per-dimension means of a k-entry
//!                                    calibration table (default 64)
//!   affine <dim> <scale> <offset>   outputs[i] = scale*inputs[i] + offset
//!   broken-dim <dim>                probe declares dim, predictions return
//!                                   dim+1 values (for failure tests)

use super::protocol::serve_stdio;
use crate::Real;

/// Serves one demo mode on stdio until stdin closes. Returns a usage error
/// message on bad arguments.
pub fn run_demo(args: &[String]) -> Result<(), String> {
    let mode = args.first().map(String::as_str).unwrap_or("");
    let io_result = match mode {
        "identity" => {
            let dim = parse::<usize>(args.get(1), "identity needs <dim>")?;
            serve_stdio(dim, (dim * (dim + 1)) as u64, |inputs| inputs.to_vec())
        }
        "constant" => {
            let spec = args.get(1).ok_or("constant needs <v1,v2,...>")?;
            let values: Vec<Real> = spec
                .split(',')
                .map(|v| v.parse().map_err(|_| format!("bad constant value {v}")))
                .collect::<Result<_, _>>()?;
            let table_len: usize = match args.iter().position(|a| a == "--table") {
                Some(i) => parse(args.get(i + 1), "--table needs <k>")?,
                None => 64,
            };
            // A literal calibration table: k stored samples per output whose
            // mean is the prediction. The declared parameter count is the
            // table size, by direct count.
            let table: Vec<Vec<Real>> = values
                .iter()
                .map(|&v| (0..table_len).map(|_| v).collect())
                .collect();
            let dim = values.len();
            let params = (dim * table_len) as u64;
            serve_stdio(dim, params, move |_inputs| {
                table
                    .iter()
                    .map(|row| row.iter().sum::<Real>() / row.len() as Real)
                    .collect()
            })
        }
        "affine" => {
            let dim = parse::<usize>(args.get(1), "affine needs <dim>")?;
            let scale = parse::<Real>(args.get(2), "affine needs <scale>")?;
            let offset = parse::<Real>(args.get(3), "affine needs <offset>")?;
            serve_stdio(dim, 2 * dim as u64, move |inputs| {
                inputs.iter().map(|v| scale * v + offset).collect()
            })
        }
        "broken-dim" => {
            let dim = parse::<usize>(args.get(1), "broken-dim needs <dim>")?;
            serve_stdio(dim, 0, move |inputs| {
                let mut out = inputs.to_vec();
                out.push(0.0);
                out
            })
        }
        _ => return Err("usage: identity|constant|affine|broken-dim ...".to_string()),
    };
    io_result.map_err(|e| e.to_string())
}

fn parse<T: std::str::FromStr>(arg: Option<&String>, msg: &str) -> Result<T, String> {
    arg.and_then(|v| v.parse().ok())
        .ok_or_else(|| msg.to_string())
}
