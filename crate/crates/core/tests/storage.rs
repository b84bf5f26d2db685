mod common;

use common::*;
use mpskit::decomposition::TruncationSpec;
use mpskit::models::heisenberg_mpo;
use mpskit::network::*;
use mpskit::scalar::ScalarKind;
use mpskit::storage::*;
use mpskit::{DenseTensor, Mps, Scalar};
use proptest::prelude::*;
use rand::Rng;

fn bits<T: Scalar>(t: &DenseTensor<T>) -> Vec<(u64, u64)> {
    t.data().iter().map(|x| (x.re_f64().to_bits(), x.im_f64().to_bits())).collect()
}

fn count_files(dir: &std::path::Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(ext))
        .count()
}

#[test]
fn mps_writes_one_file_per_site() {
    let dir = tempfile::tempdir().unwrap();
    let psi = rand_mps_c(3, 2, 2, 1);
    let large = LargeMPS::from_mps(&psi, &NameScheme::new(dir.path(), "psi_")).unwrap();
    assert_eq!(count_files(dir.path(), ".dmrjulia"), 3);
    assert!(dir.path().join("psi_0002.dmrjulia").exists());
    assert_eq!(bits(&large.site(2).unwrap()), bits(psi.tensor(2)));
    assert_eq!(large.center(), psi.oc());
    let back = large.to_memory().unwrap();
    for i in 1..=3 {
        assert_eq!(bits(back.tensor(i)), bits(psi.tensor(i)));
    }
}

#[test]
fn env_writes_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    let mut psi = rand_mps_r(5, 2, 3, 2);
    move_center(&mut psi, 3, &TruncationSpec::default()).unwrap();
    let h = heisenberg_mpo::<f64>(5, 0.5, 1.0).unwrap();
    let (l, r) = make_env(None, &psi, &[&h]).unwrap();
    let (ll, lr) = LargeEnv::from_envs(
        &l,
        &r,
        &NameScheme::new(dir.path(), "Lenv_"),
        &NameScheme::new(dir.path(), "Renv_"),
    )
    .unwrap();
    // Lenv 1..=3 and Renv 3..=5 are filled
    assert_eq!(count_files(dir.path(), ".dmrjulia"), 6);
    for i in 1..=3 {
        assert_eq!(bits(&ll.site(i).unwrap()), bits(l.get(i).unwrap()));
    }
    for i in 3..=5 {
        assert_eq!(bits(&lr.site(i).unwrap()), bits(r.get(i).unwrap()));
    }
    assert!(!ll.is_filled(4));
    assert!(ll.site(4).is_err());

    let reloaded = LargeEnv::<f64>::load(5, &NameScheme::new(dir.path(), "Renv_")).unwrap();
    assert!(reloaded.is_filled(3) && !reloaded.is_filled(2));
    let mem = reloaded.to_memory().unwrap();
    assert_eq!(bits(mem.get(5).unwrap()), bits(r.get(5).unwrap()));
    assert!(LargeEnv::from_envs(&l, &r, &NameScheme::new(dir.path(), "X"), &NameScheme::new(dir.path(), "X")).is_err());
}

#[test]
fn gauge_moves_match_in_memory_twin() {
    let dir = tempfile::tempdir().unwrap();
    let mut mem = rand_mps_c(6, 2, 4, 3);
    let mut disk = LargeMPS::from_mps(&mem, &NameScheme::new(dir.path(), "g_")).unwrap();
    let spec = TruncationSpec::default();
    for target in [4, 6, 2, 5] {
        move_center(&mut mem, target, &spec).unwrap();
        move_center(&mut disk, target, &spec).unwrap();
        assert_eq!(disk.center(), target);
        for i in 1..=6 {
            assert!(disk.site(i).unwrap().max_abs_diff(mem.tensor(i)) < 1e-12);
        }
    }
    // same expectation values through the trait interface
    let h = heisenberg_mpo::<mpskit::Complex64>(6, 0.5, 1.0).unwrap();
    let hd = LargeMPO::from_mpo(&h, &NameScheme::new(dir.path(), "h_")).unwrap();
    let e_mem = expect(None, &mem, &[&h]).unwrap();
    let e_disk = expect(None, &disk, &[&hd]).unwrap();
    assert!((e_mem - e_disk).norm() < 1e-12);
}

#[test]
fn kind_query_reads_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let psi = rand_mps_r(4, 2, 2, 4);
    let large = LargeMPS::from_mps(&psi, &NameScheme::new(dir.path(), "k_")).unwrap();
    let before = large.io_stats();
    assert_eq!(before.writes, 4);
    assert_eq!(large.kind(), ScalarKind::RealF64);
    assert_eq!(large.io_stats(), before);
    let loaded = LargeMPS::<f64>::load(4, &NameScheme::new(dir.path(), "k_"), 1).unwrap();
    assert_eq!(loaded.io_stats().reads, 0);
    assert_eq!(loaded.io_stats().header_reads, 4);
    let complex = LargeMPS::<mpskit::Complex64>::load(4, &NameScheme::new(dir.path(), "k_"), 1).unwrap();
    assert_eq!(complex.kind(), ScalarKind::ComplexF64);
}

#[test]
fn store_then_fetch() {
    let dir = tempfile::tempdir().unwrap();
    let psi = rand_mps_r(3, 2, 2, 5);
    let mut large = LargeMPS::from_mps(&psi, &NameScheme::new(dir.path(), "s_")).unwrap();
    let replacement = DenseTensor::<f64>::random(&psi.tensor(2).shape().to_vec(), &mut rng(9));
    large.set_site(2, replacement.clone()).unwrap();
    assert_eq!(bits(&large.site(2).unwrap()), bits(&replacement));
    assert!(large.set_site(2, DenseTensor::zeros(&[2, 2])).is_err());
    assert!(large.site(4).is_err());
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = NameScheme::new(dir.path(), "m_");
    let psi = rand_mps_r(4, 2, 2, 6);
    LargeMPS::from_mps(&psi, &scheme).unwrap();
    let again = LargeMPS::<f64>::load(4, &scheme, psi.oc()).unwrap();
    for i in 1..=4 {
        assert_eq!(bits(&again.site(i).unwrap()), bits(psi.tensor(i)));
    }
    assert!(LargeMPS::<f64>::load(3, &scheme, 1).is_err());
    assert!(LargeMPS::<f64>::load(5, &scheme, 1).is_err());

    std::fs::remove_file(scheme.path(3, 4)).unwrap();
    let err = LargeMPS::<f64>::load(4, &scheme, 1).unwrap_err().to_string();
    assert!(err.contains("m_0003.dmrjulia"), "{err}");

    let cscheme = NameScheme::new(dir.path(), "c_");
    LargeMPS::from_mps(&rand_mps_c(2, 2, 2, 1), &cscheme).unwrap();
    assert!(LargeMPS::<f64>::load(2, &cscheme, 1).is_err());

    let h = heisenberg_mpo::<f64>(3, 0.5, 1.0).unwrap();
    let hs = NameScheme::new(dir.path(), "w_");
    LargeMPO::from_mpo(&h, &hs).unwrap();
    let loaded = LargeMPO::<f64>::load(3, &hs).unwrap();
    assert_eq!(bits(&loaded.to_memory().unwrap().tensor(2).clone()), bits(h.tensor(2)));
    assert!(LargeMPO::<f64>::load(2, &hs).is_err());
}

#[test]
fn copies_are_isolated() {
    let dir = tempfile::tempdir().unwrap();
    let psi = rand_mps_c(4, 2, 3, 7);
    let src = LargeMPS::from_mps(&psi, &NameScheme::new(dir.path(), "src_")).unwrap();
    let reads0 = src.io_stats().reads;
    let mut copy = src.copy_to(&NameScheme::new(dir.path(), "dst_")).unwrap();
    assert_eq!(src.io_stats().reads - reads0, 4);
    assert_eq!(copy.io_stats().writes, 4);
    assert_eq!(copy.io_stats().reads, 0);

    copy.set_site(1, DenseTensor::zeros(&psi.tensor(1).shape().to_vec())).unwrap();
    assert_eq!(bits(&src.site(1).unwrap()), bits(psi.tensor(1)));

    let copy2 = src.copy_to(&NameScheme::new(dir.path(), "again_")).unwrap();
    let copy3 = copy2.copy_to(&NameScheme::new(dir.path(), "third_")).unwrap();
    for i in 1..=4 {
        assert_eq!(bits(&copy3.site(i).unwrap()), bits(psi.tensor(i)));
    }
    assert!(src.copy_to(&NameScheme::new(dir.path(), "dst_")).is_err());
}

#[test]
fn hundred_random_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(10);
    for k in 0..100 {
        let rank = k % 7;
        let shape: Vec<usize> = (0..rank).map(|_| r.random_range(1..4)).collect();
        let p = dir.path().join(format!("t{k}.dmrjulia"));
        if k % 2 == 0 {
            let t = DenseTensor::<f64>::random(&shape, &mut r);
            tensor_to_disk(&t, &p).unwrap();
            let back: DenseTensor<f64> = tensor_from_disk(&p).unwrap();
            assert_eq!((back.shape(), bits(&back)), (t.shape(), bits(&t)));
        } else {
            let t = DenseTensor::<mpskit::Complex64>::random(&shape, &mut r);
            tensor_to_disk(&t, &p).unwrap();
            let back: DenseTensor<mpskit::Complex64> = tensor_from_disk(&p).unwrap();
            assert_eq!((back.shape(), bits(&back)), (t.shape(), bits(&t)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_values_round_trip(vals in proptest::collection::vec(proptest::num::f64::ANY, 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.dmrjulia");
        let t = DenseTensor::from_vec(vec![vals.len()], vals.clone()).unwrap();
        tensor_to_disk(&t, &p).unwrap();
        let back: DenseTensor<f64> = tensor_from_disk(&p).unwrap();
        prop_assert_eq!(bits(&back), bits(&t));
    }
}

#[test]
fn disk_state_from_product() {
    let dir = tempfile::tempdir().unwrap();
    let psi: Mps = product_mps::<f64, rand_chacha::ChaCha8Rng>(&[2], 2, ProductState::First).unwrap();
    let large = LargeMPS::from_mps(&psi, &NameScheme::new(dir.path(), "p_").with_extension(".bin")).unwrap();
    assert_eq!(count_files(dir.path(), ".bin"), 2);
    assert_eq!(full_psi(&large).unwrap().data(), &[1.0, 0.0, 0.0, 0.0]);
}
