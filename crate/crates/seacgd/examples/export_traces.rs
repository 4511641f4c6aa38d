//! Exports everything a run can emit: the sampled trace CSV with its
//! self-describing JSON header line, the JSON-lines worker event log, and a
//! long-format plot file combining several runs.

use seacgd::algorithms::{se_acgd, SeOptions};
use seacgd::bench::standard_inputs;
use seacgd::hyperparams::derive_params;
use seacgd::runtime::sim::{SimConfig, SimExecutor};
use seacgd::runtime::JsonlSink;
use seacgd::trace::{emit_plot_data, RunHeader, RunTrace};
use seacgd::AcgdExecutor;
use std::io::BufWriter;
use std::path::Path;

fn main() {
    let out = Path::new("trace_out");
    std::fs::create_dir_all(out).expect("create output dir");

    let d = 1000;
    let workers = 4;
    let tau = 3;
    let mut traces = Vec::new();
    for seed in [1u64, 2] {
        let (q, inputs) = standard_inputs(d, tau, workers).expect("valid setup");
        let hp = derive_params(&inputs).expect("valid inputs");

        let events = out.join(format!("run{seed}.events.jsonl"));
        let sink = JsonlSink::new(
            BufWriter::new(std::fs::File::create(&events).expect("create event log")),
            5000,
        );
        let cfg = SimConfig {
            seed,
            sample_every: 256,
            ..SimConfig::new(hp.eta, tau, workers)
        };
        let mut exec = SimExecutor::with_sink(&q, &inputs.x0, cfg, sink).expect("valid config");
        let report =
            se_acgd(&mut exec, &q, &inputs, &hp, seed, &SeOptions::default()).expect("run");

        let trace = RunTrace {
            header: RunHeader {
                algorithm: "seacgd".into(),
                objective: "quartic".into(),
                dim: d,
                workers,
                tau,
                mode: "simulated".into(),
                seed,
                expected_delay: 0.0,
                eta: hp.eta,
                hp: Some(hp),
                target_f: None,
            },
            samples: exec.take_samples(),
            phases: report.phases.clone(),
            final_f: report.final_f,
            total_iters: report.total_global_iters,
            virtual_time: exec.virtual_time(),
            time_to_target: exec.time_to_target(),
        };
        let csv = out.join(format!("run{seed}.csv"));
        trace.write_csv(&csv).expect("write trace");
        println!("wrote {} ({} samples) and {}", csv.display(), trace.samples.len(), events.display());
        traces.push(trace);
    }

    let plot = out.join("plot_data.csv");
    emit_plot_data(&traces, &plot).expect("write plot data");
    println!("wrote {} (long format, {} runs)", plot.display(), traces.len());
}
