use polaritron_ffi::*;
use std::ffi::{c_int, CStr};
use std::path::PathBuf;
use std::ptr;

const KHZ: f64 = 2.0 * std::f64::consts::PI * 1e3;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { polaritron_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

struct Params(*mut PolaritronParams);

impl Params {
    fn new() -> Self {
        Self(polaritron_params_new())
    }
    fn set(&self, f: PolaritronField, v: f64) -> PolaritronStatus {
        unsafe { polaritron_params_set(self.0, f as c_int, v) }
    }
    fn get(&self, f: PolaritronField) -> f64 {
        let mut v = f64::NAN;
        assert_eq!(unsafe { polaritron_params_get(self.0, f as c_int, &mut v) }, PolaritronStatus::Ok);
        v
    }
}

impl Drop for Params {
    fn drop(&mut self) {
        unsafe { polaritron_params_free(self.0) };
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(polaritron_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn set_get_round_trip_and_rejection() {
    let p = Params::new();
    assert_eq!(p.set(PolaritronField::Delta, -170.0 * KHZ), PolaritronStatus::Ok);
    assert_eq!(p.get(PolaritronField::Delta), -170.0 * KHZ);
    let kappa = p.get(PolaritronField::Kappa);
    assert_eq!(p.set(PolaritronField::Kappa, -1.0), PolaritronStatus::InvalidParameter);
    assert_eq!(p.get(PolaritronField::Kappa), kappa);
    assert!(last_error().contains("kappa"), "{}", last_error());
    assert_eq!(unsafe { polaritron_params_set(p.0, 99, 1.0) }, PolaritronStatus::InvalidParameter);
    assert_eq!(unsafe { polaritron_params_set(p.0, -1, 1.0) }, PolaritronStatus::InvalidParameter);
}

#[test]
fn null_handles_are_reported() {
    let mut v = 0.0;
    assert_eq!(unsafe { polaritron_params_get(ptr::null(), 0, &mut v) }, PolaritronStatus::NullPointer);
    let p = Params::new();
    assert_eq!(unsafe { polaritron_params_get(p.0, 0, ptr::null_mut()) }, PolaritronStatus::NullPointer);
    assert_eq!(unsafe { polaritron_spectrum_len(ptr::null()) }, 0);
    unsafe {
        polaritron_params_free(ptr::null_mut());
        polaritron_spectrum_free(ptr::null_mut());
    }
}

#[test]
fn eigenmodes_ascend_and_are_stable() {
    let p = Params::new();
    let (mut f, mut w, mut ph) = ([0.0; 3], [0.0; 3], [0.0; 3]);
    let s = unsafe { polaritron_eigenmodes(p.0, f.as_mut_ptr(), w.as_mut_ptr(), ph.as_mut_ptr()) };
    assert_eq!(s, PolaritronStatus::Ok);
    assert!(f[0] < f[1] && f[1] < f[2]);
    assert!(w.iter().all(|x| *x > 0.0));
    assert!(ph.iter().all(|x| (0.0..=1.0).contains(x)));
    let mut stable: c_int = 0;
    assert_eq!(unsafe { polaritron_is_stable(p.0, &mut stable) }, PolaritronStatus::Ok);
    assert_eq!(stable, 1);
}

#[test]
fn decoupled_heterodyne_is_shot_noise() {
    let p = Params::new();
    p.set(PolaritronField::Gx, 0.0);
    p.set(PolaritronField::Gy, 0.0);
    let mut s: *mut PolaritronSpectrum = ptr::null_mut();
    let st = unsafe { polaritron_heterodyne_spectrum(p.0, -200.0 * KHZ, 200.0 * KHZ, 401, &mut s) };
    assert_eq!(st, PolaritronStatus::Ok);
    let n = unsafe { polaritron_spectrum_len(s) };
    assert_eq!(n, 401);
    let mut small = vec![0.0; 10];
    assert_eq!(
        unsafe { polaritron_spectrum_copy(s, ptr::null_mut(), small.as_mut_ptr(), small.len()) },
        PolaritronStatus::BufferTooSmall
    );
    let (mut f, mut v) = (vec![0.0; n], vec![0.0; n]);
    assert_eq!(unsafe { polaritron_spectrum_copy(s, f.as_mut_ptr(), v.as_mut_ptr(), n) }, PolaritronStatus::Ok);
    assert_eq!(f[200], 0.0);
    assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-9));
    unsafe { polaritron_spectrum_free(s) };
}

#[test]
fn decoupled_occupation_recovers_bath() {
    let p = Params::new();
    p.set(PolaritronField::Gx, 0.0);
    p.set(PolaritronField::Gy, 0.0);
    p.set(PolaritronField::GammaNx, 0.0);
    p.set(PolaritronField::NThX, 1e4);
    p.set(PolaritronField::GammaMx, 1.0 * KHZ);
    let mut n = 0.0;
    let st = unsafe { polaritron_occupation(p.0, 0.0, -4000.0 * KHZ, 4000.0 * KHZ, 800_001, &mut n) };
    assert_eq!(st, PolaritronStatus::Ok, "{}", last_error());
    assert!((n / 1e4 - 1.0).abs() < 1e-3, "{n}");

    let mut s: *mut PolaritronSpectrum = ptr::null_mut();
    let st = unsafe { polaritron_mechanical_spectrum(p.0, 0.0, -4000.0 * KHZ, 4000.0 * KHZ, 800_001, &mut s) };
    assert_eq!(st, PolaritronStatus::Ok);
    let mut area = 0.0;
    assert_eq!(unsafe { polaritron_spectrum_integral(s, &mut area) }, PolaritronStatus::Ok);
    assert_eq!(area, n);
    unsafe { polaritron_spectrum_free(s) };
}

#[test]
fn coldest_angle_of_default_point() {
    let p = Params::new();
    let (mut th, mut n) = (0.0, 0.0);
    let st = unsafe { polaritron_coldest_angle(p.0, -400.0 * KHZ, 400.0 * KHZ, 80_001, &mut th, &mut n) };
    assert_eq!(st, PolaritronStatus::Ok);
    assert!(th.to_degrees() > 0.0 && th.to_degrees() < 45.0);
    assert!(n > 0.0);
}

#[test]
fn unstable_and_bad_grid_codes() {
    let p = Params::new();
    p.set(PolaritronField::Delta, 130.0 * KHZ);
    p.set(PolaritronField::Gx, 60.0 * KHZ);
    let mut s: *mut PolaritronSpectrum = ptr::null_mut();
    let st = unsafe { polaritron_heterodyne_spectrum(p.0, -1.0, 1.0, 11, &mut s) };
    assert_eq!(st, PolaritronStatus::Unstable);
    assert!(last_error().contains("unstable"));
    assert!(s.is_null());
    let q = Params::new();
    assert_eq!(unsafe { polaritron_heterodyne_spectrum(q.0, 1.0, -1.0, 11, &mut s) }, PolaritronStatus::InvalidGrid);
}

#[test]
fn error_message_truncates() {
    let p = Params::new();
    p.set(PolaritronField::Eta, 2.0);
    let full = unsafe { polaritron_last_error(ptr::null_mut(), 0) };
    let mut buf = [0 as std::ffi::c_char; 8];
    assert_eq!(unsafe { polaritron_last_error(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include").join("polaritron.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in
        ["polaritron_params_new", "polaritron_spectrum_free", "polaritron_last_error", "POLARITRON_STATUS_UNSTABLE"]
    {
        assert!(text.contains(f), "{f}");
    }
    let src = std::env::temp_dir().join(format!("polaritron_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"polaritron.h\"\nint main(void) {\n  PolaritronParams *p = polaritron_params_new();\n  double v;\n  \
         PolaritronStatus s = polaritron_params_get(p, POLARITRON_FIELD_KAPPA, &v);\n  polaritron_params_free(p);\n  \
         return s == POLARITRON_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler available; syntax check skipped");
        return;
    };
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
