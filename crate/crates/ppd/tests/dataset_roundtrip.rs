mod common;

use ppd::dataset::{parse_dataset, write_dataset, ColumnRole, SchemaMapping};
use ppd_core::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};
use proptest::prelude::*;

fn canonical_config() -> SchemaMapping {
    SchemaMapping::load(&common::workspace_root().join("configs/postpartum.toml")).unwrap()
}

fn record() -> impl Strategy<Value = ScreeningRecord> {
    (0usize..5, proptest::array::uniform8(0usize..6), proptest::option::of(any::<bool>())).prop_map(|(a, r, y)| {
        ScreeningRecord::new(AgeBucket::ALL[a], r.map(|i| ResponseOption::ALL[i]), y)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn write_then_parse_is_lossless(records in proptest::collection::vec(record(), 0..30), use_survey_headers in any::<bool>()) {
        let mut mapping = if use_survey_headers { canonical_config() } else { SchemaMapping::canonical() };
        mapping.exclude_na = false;
        mapping.require_label = false;
        let mut buf = Vec::new();
        write_dataset(&mut buf, &records, &mapping).unwrap();
        let parsed = parse_dataset(buf.as_slice(), &mapping).unwrap();
        prop_assert_eq!(parsed.records, records);
    }
}

#[test]
fn survey_config_maps_every_topic() {
    let m = canonical_config();
    assert!(m.exclude_na);
    for t in Topic::ALL {
        assert_eq!(m.columns.values().filter(|&&r| r == ColumnRole::Topic(t)).count(), 1);
    }
    assert!(m.ignore.iter().any(|c| c == "Timestamp"));
}

#[test]
fn survey_style_rows() {
    let m = canonical_config();
    let text = "Timestamp,Age,Feeling sad or Tearful,Irritable towards baby & partner,Trouble sleeping at night,Problems concentrating or making decision,Overeating or loss of appetite,Feeling anxious,Feeling of guilt,Problems of bonding with baby,Suicide attempt\n\
                6/14/2022 20:02,35-40,Yes,Yes,Two or more days a week,Yes,Yes,Yes,No,Yes,Yes\n\
                6/14/2022 20:03,40-45,Yes,No,No,Yes,Yes,No,Yes,Yes,No\n\
                6/14/2022 20:04,25-30,No,Sometimes,,Often,No,Yes,Maybe,Sometimes,Not interested to say\n";
    let d = parse_dataset(text.as_bytes(), &m).unwrap();
    assert_eq!(d.records.len(), 2);
    assert_eq!(d.skipped_na, 1);
    assert_eq!(d.class_counts(), (1, 1));
    assert_eq!(d.records[0].response(Topic::TroubleSleeping), ResponseOption::Often);
}
