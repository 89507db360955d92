use ashvss::codec::{self, schema, CodecError};
use ashvss::setsys::{build_merged_system, GrolmuszParams, SetSystem};
use ashvss::sim::SimulationReport;

fn h() -> SetSystem {
    build_merged_system(&GrolmuszParams::new(15, 3, 3, 2).unwrap()).unwrap()
}

#[test]
fn merged_system_round_trips_byte_for_byte() {
    let h = h();
    let bytes = codec::to_bytes(schema::SET_SYSTEM, &h).unwrap();
    let back: SetSystem = codec::from_bytes(schema::SET_SYSTEM, &bytes).unwrap();
    assert_eq!(back, h);
    assert_eq!(codec::to_bytes(schema::SET_SYSTEM, &back).unwrap(), bytes);
    assert_eq!(back.len(), 783);
}

#[test]
fn corrupted_length_fields_are_errors() {
    let bytes = codec::to_bytes(schema::SET_SYSTEM, &h()).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    let corruptions = [
        text.replacen("\"bits\":948", "\"bits\":947", 1),
        text.replacen("\"bits\":948", "\"bits\":99999999999999999999999", 1),
        text.replacen("\"universe\":948", "\"universe\":949", 1),
        text.replacen("\"universe\":948", "\"universe\":-1", 1),
    ];
    for c in &corruptions {
        assert_ne!(c, &text);
        let r: Result<SetSystem, _> = codec::from_bytes(schema::SET_SYSTEM, c.as_bytes());
        assert!(matches!(r, Err(CodecError::Malformed(_))), "{:?}", r.err());
    }
    let truncated = &text.as_bytes()[..text.len() / 2];
    assert!(codec::from_bytes::<SetSystem>(schema::SET_SYSTEM, truncated).is_err());
}

#[test]
fn schema_and_version_are_enforced() {
    let bytes = codec::to_bytes(schema::SIMULATION, &SimulationReport::empty(1)).unwrap();
    assert!(matches!(
        codec::from_bytes::<SimulationReport>(schema::SHARE, &bytes),
        Err(CodecError::SchemaMismatch { .. })
    ));
    let text = String::from_utf8(bytes).unwrap().replace("\"version\":1", "\"version\":2");
    assert_eq!(
        codec::from_bytes::<SimulationReport>(schema::SIMULATION, text.as_bytes()).unwrap_err(),
        CodecError::Version { found: 2 }
    );
}
