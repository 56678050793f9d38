use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paraopt::analysis::{bound_grid_sweep, log_grid};
use paraopt::paraopt::apply_a_tilde;
use paraopt::{
    paraopt_solve, LinearPreconditioner, NewtonConfig, ObjectiveKind, PreconditionerMethod,
    PreconditionerPlan, PropagatorKind, RealVector, SmallSystemMethod,
};
use paraopt_bench::HeatFixture;

fn preconditioner_apply(c: &mut Criterion) {
    let mut g = c.benchmark_group("preconditioner_apply");
    for l_hat in [10usize, 50] {
        let f = HeatFixture::new(8, l_hat, ObjectiveKind::Tracking);
        let plan = PreconditionerPlan::build(
            &f.coarse,
            &f.decomp,
            -1.0,
            PreconditionerMethod::General,
            SmallSystemMethod::ExplicitDirect,
        )
        .unwrap();
        let v = RealVector::from_fn(2 * l_hat * f.problem.dim(), |i, _| (i as f64 * 0.37).sin());
        g.bench_with_input(BenchmarkId::new("general", l_hat), &v, |b, v| {
            b.iter(|| plan.apply(v).unwrap())
        });
        let t = HeatFixture::new(8, l_hat, ObjectiveKind::TerminalCost);
        let plan = PreconditionerPlan::build(
            &t.coarse,
            &t.decomp,
            0.01,
            PreconditionerMethod::Triangular,
            SmallSystemMethod::ExplicitDirect,
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::new("triangular", l_hat), &v, |b, v| {
            b.iter(|| plan.apply(v).unwrap())
        });
    }
    g.finish();
}

fn coarse_operator(c: &mut Criterion) {
    let f = HeatFixture::new(8, 50, ObjectiveKind::Tracking);
    let v = RealVector::from_fn(2 * 50 * f.problem.dim(), |i, _| (i as f64 * 0.11).cos());
    c.bench_function("apply_a_tilde_l50", |b| {
        b.iter(|| apply_a_tilde(&f.coarse, &f.decomp, &v).unwrap())
    });
}

fn solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("paraopt_solve");
    g.sample_size(10);
    let f = HeatFixture::new(8, 20, ObjectiveKind::Tracking);
    let plan = PreconditionerPlan::build(
        &f.coarse,
        &f.decomp,
        -1.0,
        PreconditionerMethod::General,
        SmallSystemMethod::ExplicitDirect,
    )
    .unwrap();
    let cfg = NewtonConfig { record_time: false, ..NewtonConfig::default() };
    g.bench_function("unpreconditioned", |b| {
        b.iter(|| paraopt_solve(&f.problem, &f.decomp, &f.fine, &f.coarse, None, &cfg).unwrap())
    });
    g.bench_function("general", |b| {
        b.iter(|| {
            let pre: &dyn LinearPreconditioner = &plan;
            paraopt_solve(&f.problem, &f.decomp, &f.fine, &f.coarse, Some(pre), &cfg).unwrap()
        })
    });
    g.finish();
}

fn bound_sweep(c: &mut Criterion) {
    let s = log_grid(1e-4, 1e4, 30).unwrap();
    let h = log_grid(1e-4, 1e4, 30).unwrap();
    c.bench_function("bound_sweep_30x30", |b| {
        b.iter(|| {
            bound_grid_sweep(ObjectiveKind::Tracking, PropagatorKind::Exact, PropagatorKind::ie(1), &s, &h)
                .unwrap()
        })
    });
}

criterion_group!(benches, preconditioner_apply, coarse_operator, solve, bound_sweep);
criterion_main!(benches);
