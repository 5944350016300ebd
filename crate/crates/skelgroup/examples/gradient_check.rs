//! Verify every analytic gradient against central differences: first each
//! layer primitive in isolation, then the full model end to end on a small
//! configuration.

use skelgroup::model::{ModelConfig, ModelParams};
use skelgroup::nn::gradcheck::{
    check_layer_gradients, check_model_gradients, GradCheckConfig, ModelCheckInput,
};

fn main() {
    let gc = GradCheckConfig::default();
    println!("tolerance {:.0e}, step {:.0e}\n", gc.tolerance, gc.step);

    println!("layer primitives:");
    for (name, report) in check_layer_gradients(0, &gc).expect("finite gradients") {
        println!(
            "  {name:<22} max rel err {:.3e}  ({} values checked)",
            report.max_rel_err, report.checked
        );
        assert!(report.passed(gc.tolerance));
    }

    let cfg = ModelConfig::tiny();
    let params = ModelParams::init(&cfg, 42);
    let input = ModelCheckInput::random(&cfg, 7);
    println!("\nfull model ({} actors, {} frames, {} joints):", cfg.actors, cfg.frames, cfg.joints);
    let mut worst = 0.0f64;
    for (name, report) in
        check_model_gradients(&cfg, &params, &input, &gc).expect("finite gradients")
    {
        println!(
            "  {name:<28} max rel err {:.3e}  (worst at {})",
            report.max_rel_err, report.worst
        );
        assert!(report.passed(gc.tolerance), "{name} out of tolerance");
        worst = worst.max(report.max_rel_err);
    }
    println!("\nall gradients within tolerance; worst overall {worst:.3e}");
}
