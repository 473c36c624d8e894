//! Raster types and their file formats.

mod clip;
mod io;
mod raster;

pub use clip::{
    create_dir, frame_name, load_masks_dir, numbered_files, read_meta, validate_clip, write_clip,
    write_disparity, write_frames, write_json, write_masks, ClipBundle, ClipMeta,
    DEFAULT_FRAME_RATE, DISPARITY_DIR, FRAMES_DIR, MASKS_DIR, META_FILE,
};
pub use io::{
    decode_disparity, encode_disparity, frame_bit_depth, load_disparity, load_frame, load_mask,
    save_disparity, save_frame, save_gray_preview, save_mask, BitDepth, DSP_MAGIC,
};
pub(crate) use raster::{check_dims, check_len};
pub use raster::{DisparityMap, Frame, OcclusionMask, VideoClip};
