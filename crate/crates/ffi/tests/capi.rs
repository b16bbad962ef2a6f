//! Drives the C ABI the way a foreign binding would: raw pointers, status
//! codes, out-parameters, and explicit frees.

use std::ffi::CStr;
use std::ptr;

use uframe_ffi::*;

fn check(status: UfStatus) {
    if status != UfStatus::Ok {
        let msg = unsafe { CStr::from_ptr(uframe_last_error_message()) };
        panic!("unexpected status {status:?}: {}", msg.to_string_lossy());
    }
}

unsafe fn matrix_from(rows: usize, cols: usize, re: &[f64], im: &[f64]) -> *mut UfMatrix {
    let mut out = ptr::null_mut();
    check(uframe_matrix_new(
        rows,
        cols,
        re.as_ptr(),
        im.as_ptr(),
        &mut out,
    ));
    out
}

#[test]
fn version_and_error_message_are_c_strings() {
    unsafe {
        let v = CStr::from_ptr(uframe_version());
        assert!(!v.to_string_lossy().is_empty());

        // a failing call must leave a readable message
        let mut out = ptr::null_mut();
        let status = uframe_matrix_identity(0, &mut out);
        assert_eq!(status, UfStatus::InvalidArgument);
        let msg = CStr::from_ptr(uframe_last_error_message());
        assert!(msg.to_string_lossy().contains("positive"));
    }
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            uframe_matrix_new(2, 2, ptr::null(), ptr::null(), &mut out),
            UfStatus::NullPointer
        );
        assert_eq!(uframe_matrix_rows(ptr::null()), 0);
        assert_eq!(uframe_weyl_len(ptr::null()), 0);
        uframe_matrix_free(ptr::null_mut());
        uframe_density_free(ptr::null_mut());
        uframe_povm_free(ptr::null_mut());
        uframe_frame_free(ptr::null_mut());
        uframe_dual_free(ptr::null_mut());
        uframe_weyl_free(ptr::null_mut());
    }
}

#[test]
fn invalid_states_are_rejected_with_the_right_codes() {
    unsafe {
        // trace != 1
        let re = [1.0, 0.0, 0.0, 1.0];
        let im = [0.0; 4];
        let mut out = ptr::null_mut();
        let status = uframe_density_new(2, re.as_ptr(), im.as_ptr(), &mut out);
        assert_eq!(status, UfStatus::InvalidState);

        // non-Hermitian observable
        let re = [0.0, 1.0, 0.0, 0.0];
        let mut obs = ptr::null_mut();
        let status = uframe_observable_hermitian(2, re.as_ptr(), im.as_ptr(), &mut obs);
        assert_eq!(status, UfStatus::NotHermitian);
    }
}

#[test]
fn weyl_detector_flow_through_the_c_abi() {
    unsafe {
        let d = 2usize;
        let mut weyl = ptr::null_mut();
        check(uframe_weyl_new(d, &mut weyl));
        assert_eq!(uframe_weyl_len(weyl), 4);

        // full-rank ancilla with nonzero overlaps
        let re = [0.7, 0.1, 0.1, 0.3];
        let im = [0.0, 0.05, -0.05, 0.0];
        let mut nu = ptr::null_mut();
        check(uframe_density_new(d, re.as_ptr(), im.as_ptr(), &mut nu));

        // Bell POVM and its induced system frame
        let mut povm = ptr::null_mut();
        check(uframe_weyl_bell_povm(weyl, &mut povm));
        assert_eq!(uframe_povm_len(povm), 4);
        let mut defect = f64::NAN;
        let mut min_eig = f64::NAN;
        check(uframe_povm_validate(povm, &mut defect, &mut min_eig));
        assert!(defect < 1e-10);
        assert!(min_eig > -1e-10);

        let mut universal = false;
        check(uframe_povm_is_universal(povm, nu, 1e-10, &mut universal));
        assert!(universal);

        let mut frame = ptr::null_mut();
        check(uframe_weyl_xi_frame(weyl, nu, &mut frame));
        let mut lower = 0.0;
        let mut upper = 0.0;
        check(uframe_frame_bounds(frame, &mut lower, &mut upper));
        assert!(lower > 0.0 && upper >= lower);

        // closed-form dual and completeness
        let mut dual = ptr::null_mut();
        check(uframe_abelian_dual(weyl, nu, &mut dual));
        assert_eq!(uframe_dual_len(dual), 4);
        let mut cdef = f64::NAN;
        check(uframe_completeness_defect(frame, dual, &mut cdef));
        assert!(cdef < 1e-8, "completeness defect {cdef}");

        // expand a Hermitian observable and reconstruct it
        let z_re = [1.0, 0.0, 0.0, -1.0];
        let z_im = [0.0; 4];
        let z = matrix_from(2, 2, &z_re, &z_im);
        let mut coeff_re = [0.0; 4];
        let mut coeff_im = [0.0; 4];
        let mut err = f64::NAN;
        check(uframe_frame_expand(
            frame,
            dual,
            z,
            coeff_re.as_mut_ptr(),
            coeff_im.as_mut_ptr(),
            &mut err,
        ));
        assert!(err < 1e-8, "reconstruction error {err}");

        // processing function and the exact estimator on |0⟩⟨0|
        let mut obs = ptr::null_mut();
        check(uframe_observable_hermitian(
            2,
            z_re.as_ptr(),
            z_im.as_ptr(),
            &mut obs,
        ));
        let mut f_re = [0.0; 4];
        let mut f_im = [0.0; 4];
        check(uframe_processing_function(
            dual,
            obs,
            f_re.as_mut_ptr(),
            f_im.as_mut_ptr(),
        ));

        let mut rho = ptr::null_mut();
        check(uframe_density_pure_basis(2, 0, &mut rho));
        let mut est_re = f64::NAN;
        let mut est_im = f64::NAN;
        check(uframe_estimate_expectation_exact(
            rho,
            nu,
            povm,
            f_re.as_ptr(),
            f_im.as_ptr(),
            &mut est_re,
            &mut est_im,
        ));
        assert!((est_re - 1.0).abs() < 1e-8 && est_im.abs() < 1e-8);

        // sampled estimate agrees within a few standard errors
        let n = 50_000usize;
        let mut outcomes = vec![0u64; n];
        check(uframe_sample_outcomes(
            rho,
            nu,
            povm,
            n,
            7,
            outcomes.as_mut_ptr(),
        ));
        let mut sampled = f64::NAN;
        let mut se = f64::NAN;
        check(uframe_mc_estimate(
            outcomes.as_ptr(),
            n,
            f_re.as_ptr(),
            4,
            &mut sampled,
            &mut se,
        ));
        assert!((sampled - 1.0).abs() < 4.0 * se, "sampled {sampled} ± {se}");

        uframe_matrix_free(z);
        uframe_observable_free(obs);
        uframe_density_free(rho);
        uframe_density_free(nu);
        uframe_dual_free(dual);
        uframe_frame_free(frame);
        uframe_povm_free(povm);
        uframe_weyl_free(weyl);
    }
}

#[test]
fn sud_noise_figures_through_the_c_abi() {
    unsafe {
        let d = 2usize;
        let mut nu = ptr::null_mut();
        check(uframe_density_pure_basis(d, 0, &mut nu));

        let mut p = f64::NAN;
        let mut a = f64::NAN;
        let mut b = f64::NAN;
        check(uframe_sud_params(nu, &mut p, &mut a, &mut b));
        assert!((p - 1.0).abs() < 1e-12 && (a - 3.0).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);

        let mut xi = ptr::null_mut();
        check(uframe_sud_canonical_dual_xi(nu, &mut xi));
        let mut ok = false;
        check(uframe_covariant_dual_check(xi, nu, &mut ok));
        assert!(ok);

        let z_re = [1.0, 0.0, 0.0, -1.0];
        let z_im = [0.0; 4];
        let mut obs = ptr::null_mut();
        check(uframe_observable_hermitian(
            2,
            z_re.as_ptr(),
            z_im.as_ptr(),
            &mut obs,
        ));

        let mut dobs = f64::NAN;
        check(uframe_delta_obs_analytic(obs, &mut dobs));
        assert!((dobs - 2.0 / 3.0).abs() < 1e-12);

        let mut dxi = f64::NAN;
        check(uframe_delta_xi_analytic(xi, obs, &mut dxi));
        assert!((dxi / dobs - 4.0).abs() < 1e-10);

        let mut coeff = f64::NAN;
        check(uframe_delta_opt_analytic(1.0, d, &mut coeff));
        assert!((coeff - 4.0).abs() < 1e-12);
        assert_eq!(
            uframe_delta_opt_analytic(0.4, d, &mut coeff),
            UfStatus::InvalidArgument
        );

        let mut mc = f64::NAN;
        let mut se = f64::NAN;
        check(uframe_delta_xi_mc(
            xi, nu, obs, 2_000, 8, 17, &mut mc, &mut se,
        ));
        assert!((mc - dxi).abs() < 4.0 * se, "mc {mc} ± {se} vs {dxi}");

        let mut mobs = f64::NAN;
        let mut mse = f64::NAN;
        check(uframe_delta_obs_mc(obs, 20_000, 19, &mut mobs, &mut mse));
        assert!((mobs - dobs).abs() < 4.0 * mse);

        // maximally mixed ancilla is rejected as singular
        let mut mixed = ptr::null_mut();
        check(uframe_density_maximally_mixed(d, &mut mixed));
        assert_eq!(
            uframe_sud_params(mixed, &mut p, &mut a, &mut b),
            UfStatus::Singular
        );

        uframe_density_free(mixed);
        uframe_observable_free(obs);
        uframe_matrix_free(xi);
        uframe_density_free(nu);
    }
}

#[test]
fn info_complete_construction_through_the_c_abi() {
    unsafe {
        // tetrahedron projectors: S = 2I, so the POVM halves them
        let s = 1.0 / 3f64.sqrt();
        let dirs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
        let mut handles = Vec::new();
        for n in dirs {
            let re = [
                0.5 * (1.0 + n[2]),
                0.5 * n[0],
                0.5 * n[0],
                0.5 * (1.0 - n[2]),
            ];
            let im = [0.0, -0.5 * n[1], 0.5 * n[1], 0.0];
            handles.push(matrix_from(2, 2, &re, &im));
        }
        let ptrs: Vec<*const UfMatrix> = handles.iter().map(|&h| h as *const _).collect();
        let mut povm = ptr::null_mut();
        check(uframe_info_complete_from_positive(
            4,
            ptrs.as_ptr(),
            &mut povm,
        ));
        let mut info = false;
        check(uframe_povm_is_info_complete(povm, 1e-10, &mut info));
        assert!(info);

        let mut element = ptr::null_mut();
        check(uframe_povm_element(povm, 0, &mut element));
        let mut re = [0.0; 4];
        let mut im = [0.0; 4];
        check(uframe_matrix_copy_data(
            element,
            re.as_mut_ptr(),
            im.as_mut_ptr(),
        ));
        // each output element is the projector halved: entry (0,0) = (1 + n_z)/4
        assert!((re[0] - 0.25 * (1.0 + s)).abs() < 1e-10);
        assert!((re[0] + re[3] - 0.5).abs() < 1e-10);

        uframe_matrix_free(element);
        uframe_povm_free(povm);
        for h in handles {
            uframe_matrix_free(h);
        }
    }
}
