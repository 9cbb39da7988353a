// scratch diagnostic
use ndarray::Array2;
use wavesift::learner::{learn_two_dict, expand_dictionary, TwoDictParams};
use wavesift::sparse::NNZ_EPS;
use wavesift::wavefield::{GridSpec, MaskedCube, WavefieldCube};

fn main() {
    let grid = GridSpec::new(10, 10, 0.01, 0.01, 0.0, 0.0).unwrap();
    let n = grid.n();
    let t = 40;
    let mut data = Array2::zeros((n, t));
    for idx in 0..n {
        let (ix, iy) = grid.unflat(idx);
        for k in 0..t {
            data[[idx, k]] = ((ix as f64) * 0.5 + (k as f64) * 0.3).sin() * ((iy as f64) * 0.4).cos();
        }
    }
    let spike = grid.flat(7, 2);
    for k in 0..t {
        data[[spike, k]] += 2.0 * ((k as f64) * 0.9).sin();
    }
    let cube = WavefieldCube::new(grid, 1e-4, data).unwrap();
    let masked = MaskedCube::all_active(cube).truncate_early(0.1).unwrap();
    let params = TwoDictParams { k1: 3, k2: 2, lambda: 0.05, gamma0: 0.05, delta: 0.2,
        epsilon_nnz: 6.0, max_outer_iters: 10, max_alt_iters: 15, tol: 1e-4, seed: 7 };
    let r = learn_two_dict(&masked, &params).unwrap();
    println!("gamma_final={} outer={} rel_err={} truncated={}", r.gamma_final, r.outer_iters, r.rel_error, r.truncated);
    let full = expand_dictionary(&r.d1, &masked.active);
    for j in 0..full.k() {
        let nz: Vec<usize> = (0..full.rows()).filter(|&i| full.atoms[[i, j]].abs() > NNZ_EPS).collect();
        println!("atom {j}: nnz={} at {:?} retired={}", nz.len(), &nz[..nz.len().min(12)], r.d1.retired[j]);
    }
    println!("spike idx = {spike}");
}
