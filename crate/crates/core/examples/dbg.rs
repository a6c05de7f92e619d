use specgrad_core::linalg::{topk_eigh_detailed, SymMatrix};
use specgrad_core::problems::{ProblemKind, ProblemSpec};
use specgrad_core::solver::{eg_step, ProjectionMode, SaddleState};
use std::time::Instant;

fn main() {
    let spec = ProblemSpec::new(ProblemKind::RobustPca { r: 1 }, 100, 3);
    let inst = spec.generate().unwrap();
    let p = inst.problem.as_ref();
    let mut state = SaddleState::initial(inst.warm_start.0.clone(), inst.warm_start.1.clone());

    // March a few iterations, then examine the projection input spectrum.
    for t in 0..5 {
        let t0 = Instant::now();
        let (next, probe, _step) = eg_step(p, &state, inst.default_eta, 1, ProjectionMode::TruncatedOnly, 100 + t).unwrap();
        println!("iter {t}: {:.2}ms certified={} margin={:.3}", t0.elapsed().as_secs_f64()*1e3, probe.certified, probe.certificate_margin);
        state = next;
    }
    // Build P = X - eta*grad and time topk directly.
    let g = p.grad_x(&state.x, &state.y);
    let pm = SymMatrix::symmetrize(&(state.x.dense() - &g * inst.default_eta)).unwrap();
    let t0 = Instant::now();
    let r = topk_eigh_detailed(&pm, 2, 42).unwrap();
    println!("topk(2): {:?} matvecs={} fallback={} time={:.1}ms",
        &r.spectrum.eigenvalues, r.matvecs, r.dense_fallback, t0.elapsed().as_secs_f64()*1e3);
    let t0 = Instant::now();
    let full = specgrad_core::linalg::full_eigh(&pm).unwrap();
    println!("full eigh: {:.1}ms top vals {:?} bottom {:?}", t0.elapsed().as_secs_f64()*1e3, &full.eigenvalues[..4], &full.eigenvalues[96..]);
}
