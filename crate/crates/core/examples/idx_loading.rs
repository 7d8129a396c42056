//! Parse IDX image/label files. Without arguments a tiny in-memory pair is used.
//!
//! Usage: `cargo run --example idx_loading [images.idx labels.idx]`
use ocslab::datagen::{images_and_labels, load_idx, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};

fn main() -> ocslab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let data = if let [images, labels] = args.as_slice() {
        load_idx(images, labels)?
    } else {
        let mut images = Vec::new();
        for v in [IDX_IMAGE_MAGIC, 2, 2, 2] {
            images.extend_from_slice(&v.to_be_bytes());
        }
        images.extend_from_slice(&[0, 255, 128, 64, 10, 20, 30, 40]);
        let mut labels = Vec::new();
        for v in [IDX_LABEL_MAGIC, 2] {
            labels.extend_from_slice(&v.to_be_bytes());
        }
        labels.extend_from_slice(&[4, 9]);
        images_and_labels(&images, &labels)?
    };
    println!("{} images of shape {:?}, {:?} classes", data.len(), data.image_shape(), data.num_classes());
    println!("first image: {:?}", &data.input(0)[..data.dim().min(8)]);
    Ok(())
}
