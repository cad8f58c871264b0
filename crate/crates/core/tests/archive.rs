use pvrl_core::archive::{bin_path, manifest_path, Archive, Dtype, Manifest};
use pvrl_core::Error;

#[test]
fn save_load_round_trip_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("nested/weights");
    let mut a = Archive::new();
    a.add_f32("w", &[2, 3], &[1.0, -2.0, 3.5, 0.0, f32::MIN_POSITIVE, 7.25])
        .unwrap();
    a.add_f64("b", &[2], &[0.1, -1e300]).unwrap();
    a.add_u8("frame", &[4], &[0, 1, 254, 255]).unwrap();
    a.add_f32("scalar", &[], &[42.0]).unwrap();
    a.save(&base).unwrap();
    assert!(manifest_path(&base).is_file() && bin_path(&base).is_file());

    let b = Archive::load(&base).unwrap();
    assert_eq!(b.data(), a.data());
    assert_eq!(b.names().collect::<Vec<_>>(), ["w", "b", "frame", "scalar"]);
    assert_eq!(
        b.f32("w").unwrap(),
        (vec![2, 3], vec![1.0, -2.0, 3.5, 0.0, f32::MIN_POSITIVE, 7.25])
    );
    assert_eq!(b.f64("b").unwrap().1, vec![0.1, -1e300]);
    assert_eq!(b.u8("frame").unwrap().1, &[0, 1, 254, 255]);
    assert_eq!(b.f32("scalar").unwrap(), (vec![], vec![42.0]));
    // f32 widens exactly.
    assert_eq!(b.f64("w").unwrap().1[2], 3.5);
}

#[test]
fn manifest_offsets_pack_tensors_back_to_back() {
    let mut a = Archive::new();
    a.add_u8("a", &[3], &[1, 2, 3]).unwrap();
    a.add_f64("b", &[1, 2], &[1.0, 2.0]).unwrap();
    a.add_f32("c", &[5], &[0.0; 5]).unwrap();
    let offsets: Vec<u64> = a.manifest().entries().iter().map(|e| e.offset).collect();
    assert_eq!(offsets, [0, 3, 19]);
    assert_eq!(a.manifest().total_bytes(), 39);
    assert_eq!(a.data().len(), 39);
    let text = a.manifest().to_text();
    assert_eq!(Manifest::parse(&text).unwrap(), *a.manifest());
}

#[test]
fn hand_written_manifest_parses() {
    let m =
        Manifest::parse("# trunk\n\nconv.weight f32 2,1,3,3 0\nconv.bias f32 2 72\nstep u8 - 80\n").unwrap();
    assert_eq!(m.entries().len(), 3);
    let e = m.get("conv.weight").unwrap();
    assert_eq!(
        (e.dtype, e.shape.as_slice(), e.numel()),
        (Dtype::F32, &[2usize, 1, 3, 3][..], 18)
    );
    assert_eq!(m.total_bytes(), 81);
}

#[test]
fn malformed_manifests_are_rejected() {
    for text in [
        "w f16 2 0\n",
        "w f32 2\n",
        "w f32 2 4\n",
        "w f32 2 0\nv f32 2 4\n",
        "w f32 2 0\nw f32 2 8\n",
        "w f32 x 0\n",
    ] {
        assert!(
            matches!(Manifest::parse(text), Err(Error::Manifest { .. })),
            "{text:?}"
        );
    }
}

#[test]
fn payload_size_and_dtype_are_enforced() {
    let m = Manifest::parse("w f32 2 0\n").unwrap();
    assert!(Archive::from_parts(m.clone(), vec![0; 7]).is_err());
    let a = Archive::from_parts(m, vec![0; 8]).unwrap();
    assert!(a.u8("w").is_err());
    assert!(a.f32("missing").is_err());
    let mut b = Archive::new();
    assert!(b.add_f32("w", &[3], &[1.0, 2.0]).is_err());
}

#[test]
fn missing_files_report_their_path() {
    let dir = tempfile::tempdir().unwrap();
    match Archive::load(&dir.path().join("absent")) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("absent.manifest")),
        other => panic!("{other:?}"),
    }
}
