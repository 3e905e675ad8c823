use std::fs;
use std::path::Path;

use mppsoc::rewrite::{
    apply_to_file, dry_run_report, extract_value, generate_in, render, GenError, RewriteError,
    TemplateFile, TemplateKind,
};
use mppsoc::{generate, parse_config, plan_actions, TemplateSource};

const MESH16: &str =
    "processor = minimips\nrows = 4\ncols = 4\nacu_mem_bytes = 4096\npe_mem_bytes = 1024\n\
                      neighborhood = mesh2d\nmpnoc = crossbar\n";

fn read_all(dir: &Path) -> Vec<(String, String)> {
    TemplateKind::ALL
        .iter()
        .map(|k| {
            (
                k.file_name().to_string(),
                fs::read_to_string(dir.join(k.file_name())).unwrap(),
            )
        })
        .collect()
}

#[test]
fn mesh16_report_matches_disk() {
    let dir = tempfile::tempdir().unwrap();
    let c = parse_config(MESH16).unwrap();
    let report = generate(&c, &TemplateSource::Bundled, dir.path()).unwrap();
    let files = read_all(dir.path());
    assert_eq!(report.files_written, 5);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 5);
    let lines: usize = files.iter().map(|(_, t)| t.lines().count()).sum();
    assert_eq!(report.lines_generated, lines);
    assert!(report.lines_rewritten <= report.lines_generated);
    // 4 pack constants + topology, 3 anchors in each memory
    assert_eq!(report.lines_rewritten, 5 + 3 + 3);
    let pack = &files[1].1;
    assert!(pack.contains("constant SL_add_width : integer := 8;"));
    assert!(pack.contains("constant MS_add_width : integer := 10;"));
}

#[test]
fn generation_is_idempotent() {
    let c = parse_config(MESH16).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate(&c, &TemplateSource::Bundled, a.path()).unwrap();
    generate(&c, &TemplateSource::Bundled, b.path()).unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
    // regenerating over its own output changes nothing
    let first = read_all(a.path());
    generate(&c, &TemplateSource::Dir(a.path().to_path_buf()), a.path()).unwrap();
    assert_eq!(read_all(a.path()), first);
}

#[test]
fn template_dir_with_crlf_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    TemplateSource::export_bundled(dir.path()).unwrap();
    let pack = dir.path().join("pack_mppsoc.vhd");
    let crlf = fs::read_to_string(&pack).unwrap().replace('\n', "\r\n");
    fs::write(&pack, crlf).unwrap();
    let c = parse_config(MESH16).unwrap();
    let out = tempfile::tempdir().unwrap();
    generate(
        &c,
        &TemplateSource::Dir(dir.path().to_path_buf()),
        out.path(),
    )
    .unwrap();
    let text = fs::read_to_string(out.path().join("pack_mppsoc.vhd")).unwrap();
    assert!(!text.contains('\r'));

    fs::remove_file(dir.path().join("mem_pe.vhd")).unwrap();
    let err = generate(
        &c,
        &TemplateSource::Dir(dir.path().to_path_buf()),
        out.path(),
    )
    .unwrap_err();
    assert!(matches!(err, GenError::TemplateMissing(p) if p.ends_with("mem_pe.vhd")));
}

#[test]
fn template_without_anchor_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    TemplateSource::export_bundled(dir.path()).unwrap();
    let pack = dir.path().join("pack_mppsoc.vhd");
    let text = fs::read_to_string(&pack)
        .unwrap()
        .replace("constant sl_nb_rows", "-- rows");
    fs::write(&pack, text).unwrap();
    let c = parse_config(MESH16).unwrap();
    let err = render(
        &c,
        &TemplateSource::Dir(dir.path().to_path_buf()),
        Path::new("."),
    )
    .unwrap_err();
    assert!(
        matches!(
            err,
            GenError::Rewrite(RewriteError::AnchorNeverMatched { .. })
        ),
        "{err}"
    );
}

#[test]
fn memory_image_is_checked_relative_to_base() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{MESH16}mem_init = sum.hex\n");
    let c = parse_config(&cfg).unwrap();
    let out = dir.path().join("out");
    let err = generate_in(&c, &TemplateSource::Bundled, &out, dir.path()).unwrap_err();
    assert!(matches!(err, GenError::Io { .. }));
    assert!(
        !out.exists(),
        "nothing is written when the image is missing"
    );

    fs::write(
        dir.path().join("sum.hex"),
        "# image\n0000002A\n0xFFFFFFFF\n",
    )
    .unwrap();
    generate_in(&c, &TemplateSource::Bundled, &out, dir.path()).unwrap();
    let mem = fs::read_to_string(out.join("mem_pe.vhd")).unwrap();
    assert!(mem.contains("init_file => \"sum.hex\","));

    fs::write(dir.path().join("sum.hex"), "zz\n").unwrap();
    let err = generate_in(&c, &TemplateSource::Bundled, &out, dir.path()).unwrap_err();
    assert!(matches!(err, GenError::BadImageWord { line: 1, .. }));

    let words: String = (0..257).map(|i| format!("{i:x}\n")).collect();
    fs::write(dir.path().join("sum.hex"), words).unwrap();
    let err = generate_in(&c, &TemplateSource::Bundled, &out, dir.path()).unwrap_err();
    assert!(matches!(
        err,
        GenError::ImageTooLarge {
            words: 257,
            capacity: 256,
            ..
        }
    ));
}

#[test]
fn dry_run_matches_real_run() {
    let c = parse_config(MESH16).unwrap();
    let files = render(&c, &TemplateSource::Bundled, Path::new(".")).unwrap();
    let dry = dry_run_report(&files, Default::default());
    let dir = tempfile::tempdir().unwrap();
    let real = generate(&c, &TemplateSource::Bundled, dir.path()).unwrap();
    assert_eq!(dry.to_kv(), real.to_kv());
}

#[test]
fn rewritten_values_read_back() {
    let c = parse_config(MESH16).unwrap();
    for p in plan_actions(&c) {
        let template = TemplateSource::Bundled.load(p.file).unwrap();
        let out = apply_to_file(&template, std::slice::from_ref(&p.action)).unwrap();
        for &i in &out.matched_lines {
            assert_eq!(
                extract_value(&out.file.lines[i], &p.action).as_deref(),
                Some(p.action.new_value())
            );
        }
        let again = apply_to_file(&out.file, std::slice::from_ref(&p.action)).unwrap();
        assert_eq!(again.file, out.file);
        assert_eq!(
            TemplateFile::from_text("x", &out.file.to_text()).lines,
            out.file.lines
        );
    }
}
