use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recgame::everett::{find_certificate, SearchOptions};
use recgame::shapley::{apply_operator, discounted_value};
use recgame::sim::simulate;
use recgame::{solve_matrix_game, zoo, Matrix, Player, Side, StationaryStrategy, ValueVector};

fn matrix_games(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_matrix_game");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [2usize, 4, 8, 16] {
        let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| solve_matrix_game(a).unwrap())
        });
    }
    group.finish();
}

fn operator(c: &mut Criterion) {
    let g = zoo::random_recursive(8, 3, 4, 0.2, 1).unwrap();
    let f = ValueVector::zeros(g.num_active());
    c.bench_function("apply_operator/8x4", |b| {
        b.iter(|| apply_operator(&g, 0.1, &f).unwrap())
    });
}

fn discounted(c: &mut Criterion) {
    let mut group = c.benchmark_group("discounted_value");
    let g = zoo::random_recursive(4, 2, 3, 0.2, 2).unwrap();
    for lambda in [0.1, 0.01] {
        group.bench_with_input(BenchmarkId::from_parameter(lambda), &lambda, |b, &l| {
            b.iter(|| discounted_value(&g, l, 1e-9).unwrap())
        });
    }
    group.finish();
}

fn certificates(c: &mut Criterion) {
    let g = zoo::random_recursive(3, 2, 3, 0.3, 3).unwrap();
    let target = discounted_value(&g, 1e-4, 1e-9).unwrap();
    let opts = SearchOptions::default();
    c.bench_function("find_certificate/3x3", |b| {
        b.iter(|| find_certificate(&g, Side::Plus, &target, &opts).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let g = zoo::duel();
    let sigma = StationaryStrategy::uniform(&g, Player::One);
    let tau = StationaryStrategy::uniform(&g, Player::Two);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    group.bench_function("duel/1e3x1e2", |b| {
        b.iter(|| simulate(&g, &sigma, &tau, 1_000, 100, 7).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    matrix_games,
    operator,
    discounted,
    certificates,
    simulation
);
criterion_main!(benches);
