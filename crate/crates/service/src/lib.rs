//! JSON-over-HTTP front end: classify a trajectory, replay a synthetic bot,
//! report health.
//!
//! Handlers read an immutable [`Snapshot`] behind an `Arc`; loading a model
//! swaps the whole snapshot, so a request sees either the old model or the
//! new one and never a mix.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use neuromouse_core::features::FeatureSet;
use neuromouse_core::gan::{nearest_direction, GanBundle};
use neuromouse_core::lognormal::LognormalStroke;
use neuromouse_core::model::ModelFile;
use neuromouse_core::synth::{generate_function_bot, SynthConfig};
use neuromouse_core::tags::{AttackType, Direction};
use neuromouse_core::trajectory::{Point, Trajectory};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tower_http::cors::{AllowOrigin, CorsLayer};

/// Fewer points than this cannot be decomposed.
pub const MIN_POINTS: usize = 4;

pub struct LoadedModel {
    pub file: ModelFile,
    /// Hex SHA-256 of the file bytes.
    pub version: String,
}

impl LoadedModel {
    pub fn from_bytes(bytes: &[u8]) -> neuromouse_core::Result<LoadedModel> {
        let file = ModelFile::load(bytes)?;
        Ok(LoadedModel { file, version: format!("{:x}", Sha256::digest(bytes)) })
    }
}

#[derive(Default, Clone)]
pub struct Snapshot {
    pub model: Option<Arc<LoadedModel>>,
    pub gan: Option<Arc<GanBundle>>,
}

#[derive(Clone)]
pub struct AppState {
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
    synth: Arc<SynthConfig>,
    started: Instant,
}

impl AppState {
    pub fn new(synth: SynthConfig) -> AppState {
        AppState { snapshot: Arc::default(), synth: Arc::new(synth), started: Instant::now() }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn update(&self, f: impl FnOnce(&mut Snapshot)) {
        let mut guard = self.snapshot.write().expect("snapshot lock");
        let mut next = (**guard).clone();
        f(&mut next);
        *guard = Arc::new(next);
    }

    pub fn set_model(&self, model: LoadedModel) {
        log::info!("serving model {} ({})", model.file.model.name(), model.version);
        self.update(|s| s.model = Some(Arc::new(model)));
    }

    pub fn set_gan(&self, gan: GanBundle) {
        self.update(|s| s.gan = Some(Arc::new(gan)));
    }
}

#[derive(Debug, Clone, Serialize)]
struct ApiError {
    error: String,
    #[serde(skip)]
    status: StatusCode,
}

fn fail(status: StatusCode, msg: impl Into<String>) -> ApiError {
    ApiError { error: msg.into(), status }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyRequest {
    /// `[x, y, t_ms]` with `t_ms` counted from any origin.
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub feature_set: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub label: String,
    pub score: f64,
    pub n_lognormals: usize,
    pub snr_db: f64,
    pub features: BTreeMap<String, f64>,
    pub decomposition: Vec<LognormalStroke>,
    pub model: String,
    pub latency_ms: f64,
}

fn request_trajectory(req: &ClassifyRequest) -> Result<Trajectory, ApiError> {
    if req.points.len() < MIN_POINTS {
        return Err(fail(StatusCode::BAD_REQUEST, format!("need at least {MIN_POINTS} points, got {}", req.points.len())));
    }
    if req.points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(fail(StatusCode::BAD_REQUEST, "non-finite coordinate"));
    }
    if let Some(i) = req.points.windows(2).position(|w| w[1][2] <= w[0][2]) {
        return Err(fail(StatusCode::UNPROCESSABLE_ENTITY, format!("timestamps must increase (point {})", i + 1)));
    }
    let pts = req.points.iter().map(|p| Point::new(p[0], p[1], p[2] / 1000.0)).collect();
    Trajectory::new(pts).map_err(|e| fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

async fn classify(State(st): State<AppState>, body: Bytes) -> Result<Json<ClassifyResponse>, ApiError> {
    let start = Instant::now();
    let req: ClassifyRequest = serde_json::from_slice(&body).map_err(|e| fail(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))?;
    let display = match &req.feature_set {
        Some(name) => Some(name.parse::<FeatureSet>().map_err(|e| fail(StatusCode::BAD_REQUEST, e.to_string()))?),
        None => None,
    };
    let traj = request_trajectory(&req)?;
    let snap = st.snapshot();
    let model = snap.model.as_ref().ok_or_else(|| fail(StatusCode::SERVICE_UNAVAILABLE, "no model loaded"))?;
    let pred = model.file.model.predict(&traj, display).map_err(|e| fail(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let features = pred.features.names().into_iter().zip(pred.features.values.iter().copied()).collect();
    Ok(Json(ClassifyResponse {
        label: if pred.human { "human" } else { "bot" }.into(),
        score: pred.score,
        n_lognormals: pred.decomposition.strokes.len(),
        snr_db: pred.decomposition.snr_db,
        features,
        decomposition: pred.decomposition.strokes,
        model: model.file.model.name().into(),
        latency_ms: start.elapsed().as_secs_f64() * 1000.0,
    }))
}

#[derive(Debug, Deserialize)]
struct SynthQuery {
    #[serde(rename = "type")]
    tag: String,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthResponse {
    #[serde(rename = "type")]
    pub tag: String,
    pub seed: u64,
    pub direction: Option<Direction>,
    /// Same `[x, y, t_ms]` layout as [`ClassifyRequest::points`].
    pub points: Vec<[f64; 3]>,
}

async fn synth(State(st): State<AppState>, Query(q): Query<SynthQuery>) -> Result<Json<SynthResponse>, ApiError> {
    let tag: AttackType =
        q.tag.parse().ok().filter(|t: &AttackType| !t.is_human()).ok_or_else(|| fail(StatusCode::NOT_FOUND, format!("unknown attack type '{}'", q.tag)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let traj = match tag {
        AttackType::Function(s, v) => {
            let d = Direction::new((q.seed % 8) as u8 + 1).expect("index in 1..=8");
            generate_function_bot(s, v, d, &st.synth, &mut rng)
        }
        _ => {
            let snap = st.snapshot();
            let gan = snap.gan.as_ref().ok_or_else(|| fail(StatusCode::SERVICE_UNAVAILABLE, "no GAN bundle loaded"))?;
            gan.generate(&gan.noise(&mut rng)).map(|t| {
                let d = nearest_direction(&t, &st.synth.layout);
                t.with_direction(Some(d))
            })
        }
    }
    .map_err(|e| fail(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let points = traj.points().iter().map(|p| [p.x, p.y, p.t * 1000.0]).collect();
    Ok(Json(SynthResponse { tag: tag.to_string(), seed: q.seed, direction: traj.direction(), points }))
}

async fn synth_types(State(st): State<AppState>) -> Json<serde_json::Value> {
    let types: Vec<String> = AttackType::bots().iter().map(|t| t.to_string()).collect();
    Json(serde_json::json!({ "types": types, "gan_available": st.snapshot().gan.is_some() }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_version: Option<String>,
    pub model: Option<String>,
    pub uptime_s: f64,
}

async fn healthz(State(st): State<AppState>) -> Json<Health> {
    let snap = st.snapshot();
    let model = snap.model.as_ref();
    Json(Health {
        status: if model.is_some() { "ok" } else { "degraded" }.into(),
        model_version: model.map(|m| m.version.clone()),
        model: model.map(|m| m.file.model.name().to_string()),
        uptime_s: st.started.elapsed().as_secs_f64(),
    })
}

/// `None` allows any origin.
pub fn router(state: AppState, cors_origin: Option<&str>) -> Router {
    let origin = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(v) => AllowOrigin::exact(v),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new().allow_origin(origin).allow_methods(tower_http::cors::Any).allow_headers(tower_http::cors::Any);
    Router::new()
        .route("/v1/classify", post(classify))
        .route("/v1/synth", get(synth))
        .route("/v1/synth/types", get(synth_types))
        .route("/healthz", get(healthz))
        .layer(cors)
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub model: Option<PathBuf>,
    pub gan: Option<PathBuf>,
    pub cors_origin: Option<String>,
    pub synth: SynthConfig,
}

fn load_model(path: &PathBuf) -> std::io::Result<LoadedModel> {
    let bytes = std::fs::read(path)?;
    LoadedModel::from_bytes(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

/// Serves until the process is stopped. On Unix, SIGHUP reloads the model file.
pub async fn serve(cfg: ServeConfig) -> std::io::Result<()> {
    let state = AppState::new(cfg.synth.clone());
    if let Some(p) = &cfg.model {
        state.set_model(load_model(p)?);
    }
    if let Some(p) = &cfg.gan {
        let gan: GanBundle = serde_json::from_slice(&std::fs::read(p)?)?;
        gan.validate().map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
        state.set_gan(gan);
    }
    #[cfg(unix)]
    if let Some(path) = cfg.model.clone() {
        let st = state.clone();
        let mut hup = tokio::signal::unix::signal(tokio::signal::unix::SignalKind::hangup())?;
        tokio::spawn(async move {
            while hup.recv().await.is_some() {
                match load_model(&path) {
                    Ok(m) => st.set_model(m),
                    Err(e) => log::error!("reload failed, keeping the current model: {e}"),
                }
            }
        });
    }
    let listener = tokio::net::TcpListener::bind(cfg.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, cfg.cors_origin.as_deref())).await
}
