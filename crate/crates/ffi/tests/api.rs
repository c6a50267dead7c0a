use std::ffi::{c_char, CString};
use std::ptr;

use t2ieval_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let needed = unsafe { t2i_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let msg: Vec<u8> = buf
        .iter()
        .take_while(|&&c| c != 0)
        .map(|&c| c as u8)
        .collect();
    assert_eq!(needed, msg.len() + 1);
    String::from_utf8(msg).unwrap()
}

fn diagonal(n: u64, mean: [f64; 2], var: [f64; 2]) -> *mut T2iStats {
    let cov = [var[0], 0.0, 0.0, var[1]];
    let mut out = ptr::null_mut();
    let status = unsafe { t2i_stats_from_parts(n, mean.as_ptr(), cov.as_ptr(), 2, &mut out) };
    assert_eq!(status, T2iStatus::Ok);
    out
}

#[test]
fn frechet_and_cmd_through_handles() {
    let a = diagonal(10, [0.0, 0.0], [1.0, 1.0]);
    let b = diagonal(10, [1.0, 1.0], [4.0, 9.0]);
    let mut d = 0.0;
    assert_eq!(unsafe { t2i_frechet_distance(a, b, &mut d) }, T2iStatus::Ok);
    assert!((d - 7.0).abs() < 1e-12);
    assert_eq!(last_error(), "");

    let mut rep = T2iCmdReport::default();
    assert_eq!(unsafe { t2i_compute_cmd(a, a, b, &mut rep) }, T2iStatus::Ok);
    assert_eq!(rep.cmd, 0.0);
    assert!(!rep.regularized_fr);
    unsafe {
        t2i_stats_free(a);
        t2i_stats_free(b);
        t2i_stats_free(ptr::null_mut());
    }
}

#[test]
fn estimate_merge_save_load() {
    let lo = [0.0, 2.0];
    let hi = [4.0, 6.0];
    let (mut a, mut b, mut m) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(t2i_stats_estimate(lo.as_ptr(), 2, 1, &mut a), T2iStatus::Ok);
        assert_eq!(t2i_stats_estimate(hi.as_ptr(), 2, 1, &mut b), T2iStatus::Ok);
        assert_eq!(t2i_stats_merge(a, b, &mut m), T2iStatus::Ok);
        assert_eq!(t2i_stats_count(m), 4);
        assert_eq!(t2i_stats_dim(m), 1);
        let (mut mean, mut var) = (0.0, 0.0);
        assert_eq!(t2i_stats_copy(m, &mut mean, &mut var), T2iStatus::Ok);
        assert!((mean - 3.0).abs() < 1e-15 && (var - 20.0 / 3.0).abs() < 1e-14);

        let dir = tempfile::tempdir().unwrap();
        let file = CString::new(dir.path().join("m.stats").to_str().unwrap()).unwrap();
        assert_eq!(t2i_stats_save(m, file.as_ptr()), T2iStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(t2i_stats_load(file.as_ptr(), &mut back), T2iStatus::Ok);
        let mut d = f64::NAN;
        assert_eq!(t2i_frechet_distance(m, back, &mut d), T2iStatus::Ok);
        assert_eq!(d, 0.0);
        for h in [a, b, m, back] {
            t2i_stats_free(h);
        }
    }
}

#[test]
fn error_codes_and_messages() {
    let mut out = ptr::null_mut();
    let one = [1.0];
    unsafe {
        assert_eq!(
            t2i_stats_estimate(one.as_ptr(), 1, 1, &mut out),
            T2iStatus::InvalidArgument
        );
        assert!(last_error().starts_with("FewerThanTwoSamples"));
        assert!(out.is_null());
        assert_eq!(
            t2i_stats_estimate(ptr::null(), 2, 2, &mut out),
            T2iStatus::NullPointer
        );
        assert_eq!(
            t2i_stats_estimate(one.as_ptr(), 1, 1, ptr::null_mut()),
            T2iStatus::NullPointer
        );

        let missing = CString::new("/nonexistent/x.stats").unwrap();
        assert_eq!(
            t2i_stats_load(missing.as_ptr(), &mut out),
            T2iStatus::IoError
        );
        assert!(last_error().starts_with("MissingFile"));

        let a = diagonal(5, [0.0, 0.0], [1.0, 1.0]);
        let mut c = ptr::null_mut();
        assert_eq!(
            t2i_stats_estimate(one.as_ptr(), 1, 1, &mut c),
            T2iStatus::InvalidArgument
        );
        let three = [0.0, 1.0, 2.0];
        assert_eq!(
            t2i_stats_estimate(three.as_ptr(), 3, 1, &mut c),
            T2iStatus::Ok
        );
        let mut d = 0.0;
        assert_eq!(t2i_frechet_distance(a, c, &mut d), T2iStatus::ShapeMismatch);
        assert_eq!(
            t2i_frechet_distance(a, ptr::null(), &mut d),
            T2iStatus::NullPointer
        );

        let indefinite = [1.0, 0.0, 0.0, -1.0];
        let mut root = [0.0; 4];
        assert_eq!(
            t2i_sqrtm_psd(indefinite.as_ptr(), 2, root.as_mut_ptr()),
            T2iStatus::NumericalError
        );
        assert!(last_error().starts_with("IndefiniteMatrix"));
        t2i_stats_free(a);
        t2i_stats_free(c);
    }
}

#[test]
fn message_is_truncated_to_buffer() {
    let one = [1.0];
    let mut out = ptr::null_mut();
    unsafe {
        t2i_stats_estimate(one.as_ptr(), 1, 1, &mut out);
        let full = t2i_last_error_message(ptr::null_mut(), 0);
        let mut small = [0x7f as c_char; 8];
        assert_eq!(
            t2i_last_error_message(small.as_mut_ptr(), small.len()),
            full
        );
        assert_eq!(small[7], 0);
        assert!(full > 8);
    }
}

#[test]
fn score_matrix_functions() {
    let equal = [0.5; 4];
    let (mut l1, mut l2) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            t2i_contrastive_loss(equal.as_ptr(), 2, 10.0, &mut l1, &mut l2),
            T2iStatus::Ok
        );
    }
    assert!((l1 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    assert_eq!(l1, l2);

    // Row-major: image 0 prefers sentence 1, which in turn prefers image 0.
    let scores = [0.1, 0.9, 0.0, 0.8];
    let mut recall = T2iRecall::default();
    unsafe {
        assert_eq!(
            t2i_rank_retrieval(scores.as_ptr(), 2, &mut recall),
            T2iStatus::Ok
        );
    }
    assert_eq!(recall.image_to_text, [50.0, 100.0, 100.0]);
    assert_eq!(recall.text_to_image, [50.0, 100.0, 100.0]);

    let a = [4.0, 0.0, 0.0, 9.0];
    let mut root = [0.0; 4];
    unsafe {
        assert_eq!(
            t2i_sqrtm_psd(a.as_ptr(), 2, root.as_mut_ptr()),
            T2iStatus::Ok
        );
    }
    assert!(root
        .iter()
        .zip([2.0, 0.0, 0.0, 3.0])
        .all(|(x, y)| (x - y).abs() < 1e-12));
}

#[test]
fn version_string() {
    let v = unsafe { std::ffi::CStr::from_ptr(t2i_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
