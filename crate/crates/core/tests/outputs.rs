use std::fs;

use thermoporo::cli_io::{self, Command};
use thermoporo::{MaterialParams, TriMesh};

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn config_file_round_trip_and_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg_path,
        format!(
            "# small run\nn = 2\nt_final = 0.1\ndt = 0.05\ncase = free_decay\namplitude = 0.5\noutput_dir = {}\n\n[solver]\ninitial_guess = zero\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let cfg = cli_io::read_config(&cfg_path).unwrap();
    assert_eq!(cfg.case, cli_io::CaseKind::FreeDecay);
    let outcome = cli_io::execute(Command::Run, &cfg, 0).unwrap();
    assert!(outcome.passed);
    assert_eq!(outcome.files.len(), 4);

    let header = cfg.header();
    for f in &outcome.files {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.starts_with(&header), "{}", f.display());
        // the echoed header parses back to the same configuration
        let echoed: String = text.lines().take_while(|l| l.starts_with("# ")).map(|l| format!("{}\n", &l[2..])).collect();
        assert_eq!(cli_io::parse_config(&echoed).unwrap(), cfg);
    }
    let cells = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    let rows = data_rows(&cells);
    assert_eq!(rows[0], "triangle,x,y,T,p,ux,uy,rho");
    assert_eq!(rows.len(), 1 + 8);
    let steps = fs::read_to_string(out_dir.join("steps.csv")).unwrap();
    assert_eq!(data_rows(&steps).len(), 1 + 3);
}

#[test]
fn mesh_and_matrix_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = TriMesh::build_structured(2).unwrap();
    let path = dir.path().join("mesh.txt");
    mesh.write_tables(fs::File::create(&path).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() >= mesh.num_vertices() + mesh.num_triangles() + mesh.num_edges());

    let blocks = thermoporo::Blocks::assemble(&mesh, &MaterialParams::preset(), thermoporo::Execution::Sequential);
    let phi = blocks.phi();
    let path = dir.path().join("phi.coo");
    phi.write_coo(fs::File::create(&path).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let entries: Vec<(usize, usize, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(entries.len(), phi.nnz());
    for (r, c, v) in entries {
        assert_eq!(phi.get(r, c), v);
    }
}

#[test]
fn pencil_check_subcommand_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = cli_io::parse_config("n = 1\nt_final = 1\n[pencil]\ns = -2\n").unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let outcome = cli_io::execute(Command::PencilCheck, &cfg, 0).unwrap();
    assert!(outcome.passed, "{}", outcome.report);
    let text = fs::read_to_string(dir.path().join("pencil.csv")).unwrap();
    assert_eq!(data_rows(&text).len(), 2);
}
