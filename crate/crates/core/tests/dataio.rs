use std::io::Write;
use tvssv::dataio::{load_csv, Period, SeriesSpec, Transform};
use tvssv::Error;

fn csv_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

fn spec(name: &str, transform: Transform) -> SeriesSpec {
    SeriesSpec { name: name.into(), transform }
}

#[test]
fn loads_selected_columns_and_trims_leading_gaps() {
    let f = csv_file(
        "# vintage note\n\
         date,gdp,nfci,unused\n\
         2000-Q1,100,,1\n\
         2000-Q2,101,0.5,1\n\
         2000-Q3,102.5,NA,1\n\
         2000-Q4,103,-0.2,1\n",
    );
    let e = load_csv(f.path(), &[spec("nfci", Transform::Level), spec("gdp", Transform::LogDiff)]).unwrap_err();
    assert!(matches!(e, Error::Data(ref m) if m.contains("2000-Q3")), "{e}");

    let f = csv_file("date,gdp,nfci\n2000-Q1,100,\n2000-Q2,101,0.5\n2000-Q3,102.5,0.1\n2000-Q4,103,-0.2\n");
    let frame = load_csv(f.path(), &[spec("nfci", Transform::Level), spec("gdp", Transform::Diff)]).unwrap();
    assert_eq!(frame.names, ["nfci", "gdp"]);
    assert_eq!(frame.dates.first().unwrap().to_string(), "2000-Q2");
    assert_eq!(frame.n_obs(), 3);
    assert_eq!(frame.values[(0, 1)], 1.0);
    assert_eq!(frame.values[(2, 0)], -0.2);
    assert_eq!(frame.position("2000-Q4".parse::<Period>().unwrap()), Some(2));
    assert_eq!(frame.through(1).n_obs(), 2);
}

#[test]
fn rejects_bad_inputs() {
    let specs = [spec("x", Transform::Level)];
    let cases = [
        "when,x\n2000-01,1\n",
        "date,y\n2000-01,1\n",
        "date,x\n2000-01,1\n2000-03,2\n",
        "date,x\n2000-01,1\n2000-02,abc\n",
        "date,x\n2000/01,1\n",
    ];
    for body in cases {
        let f = csv_file(body);
        assert!(matches!(load_csv(f.path(), &specs), Err(Error::Data(_))), "{body:?}");
    }
    assert!(load_csv("/nonexistent/file.csv", &specs).is_err());
}

#[test]
fn monthly_missing_markers() {
    let f = csv_file("date,x\n1999-11,.\n1999-12,nan\n2000-01,4\n2000-02,5\n");
    let frame = load_csv(f.path(), &[spec("x", Transform::Log)]).unwrap();
    assert_eq!(frame.dates[0], Period::Monthly { year: 2000, month: 1 });
    assert!((frame.values[(1, 0)] - 5f64.ln()).abs() < 1e-15);
}
