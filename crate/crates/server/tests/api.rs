use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use bivox::analysis::hierarchy::VarsetQuery;
use bivox::analysis::info::mutual_information;
use bivox::analysis::*;
use bivox::data::Dims;
use bivox::miner::{mine_all, Bicluster, MiningParams};
use bivox::synth::{generate, SyntheticConfig};
use bivox::{BiclusterCatalog, Provenance, VariableVoxelMatrix};
use bivox_server::{router, AppState, Projection, SESSION_HEADER};
use http_body_util::BodyExt;
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

fn fixture() -> (BiclusterCatalog, VariableVoxelMatrix) {
    static DATA: OnceLock<(BiclusterCatalog, VariableVoxelMatrix)> = OnceLock::new();
    DATA.get_or_init(|| {
        let config = SyntheticConfig {
            dims: Dims::new(12, 12, 12),
            cells: 12,
            ..SyntheticConfig::planted_default(5, 20.0)
        };
        let data = generate(&config).unwrap();
        let params = MiningParams {
            minv_frac: 0.01,
            ..MiningParams::default()
        };
        (mine_all(&data.matrix, &params).unwrap(), data.matrix)
    })
    .clone()
}

fn state() -> Arc<AppState> {
    let (catalog, matrix) = fixture();
    Arc::new(AppState::new(catalog, matrix, AnalysisOptions::default()).unwrap())
}

async fn call(
    state: &Arc<AppState>,
    method: Method,
    uri: &str,
    session: Option<&str>,
    body: Option<serde_json::Value>,
) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(s) = session {
        req = req.header(SESSION_HEADER, s);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

async fn get(state: &Arc<AppState>, uri: &str) -> Reply {
    call(state, Method::GET, uri, None, None).await
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).unwrap()
}

fn f32s(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

#[tokio::test]
async fn read_endpoints_match_direct_calls() {
    let s = state();
    let (catalog, matrix) = fixture();
    assert!(catalog.len() > 10, "fixture too small: {}", catalog.len());
    let records = build_hierarchy(&catalog, &matrix);

    assert_eq!(get(&s, "/api/health").await.status, StatusCode::OK);
    assert_eq!(
        get(&s, "/api/dataset").await.body,
        to_json(&DatasetSummary::new(&catalog, &matrix))
    );
    assert_eq!(
        get(&s, "/api/variables/stats").await.body,
        to_json(&variable_stats(&matrix, 256).unwrap())
    );

    let q = VarsetQuery {
        min_card: Some(3),
        sort: Some(SortKey::Correlation),
        order: SortOrder::Desc,
        ..Default::default()
    };
    let rows: Vec<VariableSetRecord> = list_varsets(&records, &q).into_iter().cloned().collect();
    let reply = get(&s, "/api/varsets?min_card=3&sort=correlation&order=desc").await;
    assert_eq!(reply.body, to_json(&rows));
    assert!(rows.iter().all(|r| r.cardinality >= 3));
    assert_eq!(get(&s, "/api/varsets").await.body, to_json(&records));
    assert_eq!(get(&s, "/api/varsets/1").await.body, to_json(&records[1]));

    for r in &records {
        let a = VarsetAnalysis::compute(r, &catalog, &AnalysisOptions::default()).unwrap();
        let expected = Projection {
            varset: r.id,
            layout: a.projection(&a.default_groups),
            groups: a.default_groups.clone(),
        };
        let reply = get(&s, &format!("/api/varsets/{}/projection", r.id)).await;
        assert_eq!(reply.body, to_json(&expected));
        assert_eq!(
            get(&s, &format!("/api/varsets/{}/groups", r.id)).await.body,
            to_json(&a.default_groups)
        );

        let g0 = &a.default_groups.groups[0];
        let sel = Selection::group(&catalog, &g0.members).unwrap();
        let pc = pc_data(&sel.variables, &sel.voxels(&catalog), &matrix, 64).unwrap();
        assert_eq!(
            get(&s, &format!("/api/groups/{}-0/pcdata", r.id)).await.body,
            to_json(&pc)
        );
        let vol = probability_volume(&sel, &catalog, matrix.dims());
        let reply = get(&s, &format!("/api/groups/{}-0/slice?axis=y&index=3", r.id)).await;
        assert_eq!(f32s(&reply.body), slice(&vol, Axis::Y, 3).unwrap().values);
        assert_eq!(reply.headers["x-bivox-width"], "12");
    }

    let b = &catalog.biclusters[3];
    let pc = pc_data(&b.variables, &b.voxels, &matrix, 16).unwrap();
    assert_eq!(get(&s, "/api/biclusters/3/pcdata?bins=16").await.body, to_json(&pc));
    let vol = probability_volume(&Selection::bicluster(&catalog, 3).unwrap(), &catalog, matrix.dims());
    let m = get(&s, "/api/biclusters/3/mip?axis=z").await;
    assert_eq!(f32s(&m.body), mip(&vol, Axis::Z).values);
    let sl = f32s(&get(&s, "/api/biclusters/3/slice?axis=z&index=5").await.body);
    assert!(sl.iter().all(|&v| v == 0.0 || v == 1.0));
    assert!(sl.iter().zip(f32s(&m.body)).all(|(a, b)| *a <= b));
}

#[tokio::test]
async fn drilldown_returns_rows_and_mutual_information() {
    let s = state();
    let (_, matrix) = fixture();
    let d = get(&s, "/api/variables/2/mi").await.json();
    let mi: Vec<f64> = serde_json::from_value(d["mutual_information"].clone()).unwrap();
    for (v, value) in mi.iter().enumerate() {
        assert_eq!(*value, mutual_information(&matrix, 2, v as u16, 256).unwrap());
    }
    for row in d["varsets"].as_array().unwrap() {
        assert!(row["variables"].as_array().unwrap().contains(&serde_json::json!(2)));
    }
    assert_eq!(get(&s, "/api/variables/99/mi").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn repeated_reads_are_byte_identical() {
    let s = state();
    for uri in [
        "/api/varsets?sort=bicluster_count",
        "/api/varsets/0/projection",
        "/api/biclusters/0/pcdata",
        "/api/variables/0/mi",
    ] {
        assert_eq!(get(&s, uri).await.body, get(&s, uri).await.body, "{uri}");
    }
}

#[tokio::test]
async fn request_errors() {
    let s = state();
    assert_eq!(
        get(&s, "/api/varsets?sort=volume").await.status,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(get(&s, "/api/varsets/9999").await.status, StatusCode::NOT_FOUND);
    assert_eq!(
        get(&s, "/api/biclusters/999999/pcdata").await.status,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        get(&s, "/api/biclusters/0/slice?axis=x&index=12").await.status,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        get(&s, "/api/biclusters/0/slice?axis=w&index=1").await.status,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(get(&s, "/api/groups/0/pcdata").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(get(&s, "/api/export?kind=nope").await.status, StatusCode::BAD_REQUEST);
    let merge = serde_json::json!({ "groups": [0, 1] });
    let no_session = call(
        &s,
        Method::POST,
        "/api/varsets/0/groups/merge",
        None,
        Some(merge.clone()),
    )
    .await;
    assert_eq!(no_session.status, StatusCode::BAD_REQUEST);
    let unknown = call(
        &s,
        Method::POST,
        "/api/varsets/0/groups/merge",
        Some("nope"),
        Some(merge),
    )
    .await;
    assert_eq!(unknown.status, StatusCode::NOT_FOUND);
}

async fn new_session(s: &Arc<AppState>) -> String {
    call(s, Method::POST, "/api/session", None, None).await.json()["session"]
        .as_str()
        .unwrap()
        .to_owned()
}

#[tokio::test]
async fn sessions_are_isolated() {
    let s = state();
    let (a, b) = (new_session(&s).await, new_session(&s).await);
    assert_ne!(a, b);
    let varset = (0..s.records.len())
        .find(|&v| s.analysis(v).unwrap().default_groups.len() >= 3)
        .unwrap();
    let groups_uri = format!("/api/varsets/{varset}/groups");
    let default = get(&s, &groups_uri).await.body;

    let merged = call(
        &s,
        Method::POST,
        &format!("{groups_uri}/merge"),
        Some(&a),
        Some(serde_json::json!({ "groups": [0, 1] })),
    )
    .await;
    assert_eq!(merged.status, StatusCode::OK);
    let merged_groups: GroupSet = serde_json::from_slice(&merged.body).unwrap();
    let direct = s.analysis(varset).unwrap();
    assert_eq!(merged_groups, direct.merge(&direct.default_groups, &[0, 1]).unwrap());
    assert_eq!(
        call(&s, Method::GET, &groups_uri, Some(&a), None).await.body,
        merged.body
    );

    // Neither the other session nor session-less readers see the edit.
    assert_eq!(call(&s, Method::GET, &groups_uri, Some(&b), None).await.body, default);
    assert_eq!(get(&s, &groups_uri).await.body, default);
    let proj_b = call(
        &s,
        Method::GET,
        &format!("/api/varsets/{varset}/projection"),
        Some(&b),
        None,
    )
    .await;
    assert_eq!(
        proj_b.json()["groups"],
        serde_json::from_slice::<serde_json::Value>(&default).unwrap()
    );

    // Group-scoped views follow the session's grouping.
    let pc_a = call(
        &s,
        Method::GET,
        &format!("/api/groups/{varset}-0/pcdata"),
        Some(&a),
        None,
    )
    .await;
    let sel = Selection::group(&s.catalog, &merged_groups.groups[0].members).unwrap();
    assert_eq!(
        pc_a.body,
        to_json(&pc_data(&sel.variables, &sel.voxels(&s.catalog), &s.matrix, 64).unwrap())
    );

    let reset = call(&s, Method::POST, &format!("{groups_uri}/reset"), Some(&a), None).await;
    assert_eq!(reset.body, default);
    assert_eq!(call(&s, Method::GET, &groups_uri, Some(&a), None).await.body, default);
}

#[tokio::test]
async fn split_singleton_is_rejected() {
    let s = state();
    let a = new_session(&s).await;
    let (varset, group) = (0..s.records.len())
        .find_map(|v| {
            let g = s.analysis(v).unwrap().default_groups.clone();
            g.groups.iter().position(|x| x.members.len() == 1).map(|i| (v, i))
        })
        .unwrap();
    let r = call(
        &s,
        Method::POST,
        &format!("/api/varsets/{varset}/groups/split"),
        Some(&a),
        Some(serde_json::json!({ "group": group })),
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json()["error"].as_str().unwrap().contains("single member"));
}

#[tokio::test]
async fn exports() {
    let s = state();
    let (catalog, _) = fixture();
    let cat = get(&s, "/api/export?kind=catalog").await;
    assert_eq!(
        BiclusterCatalog::from_json(std::str::from_utf8(&cat.body).unwrap()).unwrap(),
        catalog
    );

    let pc = get(&s, "/api/export?kind=pcdata&selection=group:0-0").await;
    assert_eq!(pc.body, get(&s, "/api/groups/0-0/pcdata").await.body);

    // A full-volume bicluster exports as all ones.
    let dims = Dims::new(3, 2, 2);
    let cols = vec![vec![1.0; 12], vec![2.0; 12]];
    let m = VariableVoxelMatrix::from_columns(dims, vec!["a".into(), "b".into()], cols).unwrap();
    let full = BiclusterCatalog::new(
        vec![Bicluster::new(vec![0, 1], (0..12).collect())],
        MiningParams::default(),
        Provenance::default(),
    );
    let small = Arc::new(AppState::new(full, m, AnalysisOptions::default()).unwrap());
    let vol = get(&small, "/api/export?kind=probability_volume&selection=bicluster:0").await;
    assert_eq!(vol.headers["x-bivox-dims"], "3,2,2");
    assert_eq!(f32s(&vol.body), vec![1.0; 12]);
}

#[tokio::test]
async fn bearer_token_is_enforced() {
    let (catalog, matrix) = fixture();
    let s = Arc::new(
        AppState::new(catalog, matrix, AnalysisOptions::default())
            .unwrap()
            .with_token(Some("secret".into())),
    );
    assert_eq!(get(&s, "/api/dataset").await.status, StatusCode::UNAUTHORIZED);
    assert_eq!(get(&s, "/api/health").await.status, StatusCode::OK);
    let req = Request::builder()
        .uri("/api/dataset")
        .header("authorization", "Bearer secret")
        .body(Body::empty())
        .unwrap();
    assert_eq!(router(s.clone()).oneshot(req).await.unwrap().status(), StatusCode::OK);
}

#[test]
fn load_checks_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&SyntheticConfig {
        dims: Dims::new(6, 6, 6),
        cells: 6,
        ..SyntheticConfig::planted_default(2, 20.0)
    })
    .unwrap();
    let manifest_path = data.write(dir.path()).unwrap();
    let manifest = bivox::DatasetManifest::from_path(&manifest_path).unwrap();
    let (matrix, _) = bivox::data::load_normalized(&manifest).unwrap();
    let catalog = mine_all(&matrix, &MiningParams::default())
        .unwrap()
        .with_provenance(Provenance::of(&manifest));
    let cat_path = dir.path().join("catalog.json");
    catalog.save_json(&cat_path).unwrap();
    assert!(AppState::load(&manifest_path, &cat_path, AnalysisOptions::default()).is_ok());

    let other = catalog.with_provenance(Provenance {
        dataset: "elsewhere".into(),
        manifest_hash: "0".repeat(64),
    });
    other.save_json(&cat_path).unwrap();
    let err = AppState::load(&manifest_path, &cat_path, AnalysisOptions::default())
        .err()
        .unwrap();
    assert!(matches!(err, bivox::Error::ProvenanceMismatch { .. }), "{err}");
}
