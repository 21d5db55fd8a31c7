//! End-to-end versus two-stage training of a return predictor feeding a
//! long-only mean-variance allocation.

use bpqp::portfolio::{synthetic_panel, train_e2e, Mode, SyntheticConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let panel = synthetic_panel(&SyntheticConfig::default())?;
    for mode in [Mode::TwoStage, Mode::E2e] {
        let report = train_e2e(&panel, &TrainConfig { mode, ..TrainConfig::default() })?;
        println!("{mode}");
        for e in report.epochs.iter().step_by(5) {
            println!(
                "  epoch {:>2}: prediction loss {:.3}, decision loss {:.4}",
                e.epoch, e.prediction_loss, e.decision_loss
            );
        }
        let m = report.test;
        println!(
            "  test: regret {:.4}  IC {:.3}  ICIR {:.3}  ann. return {:.2}  Sharpe {:.2}",
            m.regret, m.ic, m.icir, m.ann_ret, m.sharpe
        );
    }
    Ok(())
}
