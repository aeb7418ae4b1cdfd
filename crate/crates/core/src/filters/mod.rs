//! Geometric and quality filters for edit triplets.

mod bbox;
mod blur;
mod correspondences;
mod frames;
mod gates;
mod homography;
mod svd;
mod warp;

pub use bbox::{iou, BoundingBox};
pub use blur::{blur_effect, BLUR_KERNEL};
pub use correspondences::{grid_correspondences, read_match_file, write_match_file, MatchConfig};
pub use frames::select_diverse_frames;
pub use gates::{
    assessor_threshold_filter, face_iou_filter, read_face_sidecar, FaceGate, FaceSidecar, FilterReportLine,
    FilterVerdict, ThresholdPartition, DEFAULT_ASSESSOR_THRESHOLD, DEFAULT_FACE_IOU_THRESHOLD,
};
pub use homography::{
    estimate_homography_dlt, ransac_homography, reprojection_rmse,
    required_support, symmetric_transfer_error, Correspondences, DltEstimate, Homography, PointPair, RansacConfig,
    RansacEstimate, DEFAULT_INLIER_TOL, DEFAULT_RANSAC_ITERS, MIN_ABS_DET,
};
pub use svd::{jacobi_svd, Svd};
pub use warp::{align_pair, is_near_identity, warp_image};
