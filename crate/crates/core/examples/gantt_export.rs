//! Writes the step-4 schedule as JSON and prints a text timeline.

use h2h::fixtures::{fig2_model, toy_system};
use h2h::{run_h2h, validate_gantt, Instance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (g, sys) = (fig2_model(), toy_system());
    let r = run_h2h(&g, &sys)?;
    let gantt = r.last().schedule.to_gantt(&Instance::new(&g, &sys)?, r.final_state());
    validate_gantt(&g, &gantt)?;

    let path = std::env::temp_dir().join("fig2_gantt.json");
    std::fs::write(&path, serde_json::to_string_pretty(&gantt)?)?;
    println!("wrote {}", path.display());
    for lane in &gantt.accelerators {
        let spans: Vec<String> = lane
            .layers
            .iter()
            .map(|e| format!("{} [{}, {})", e.layer, e.start, e.finish))
            .collect();
        println!("{}: {}", lane.id, spans.join("  "));
    }
    Ok(())
}
