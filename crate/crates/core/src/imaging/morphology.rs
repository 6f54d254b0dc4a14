use crate::image::{BinaryImage, GrayImage};

/// Integer offsets `(dx, dy)` with `dx² + dy² <= radius²`.
pub fn disk_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect()
}

/// Binary dilation with a disk. Pixels outside the image count as black.
pub fn dilate_disk(img: &BinaryImage, radius: usize) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let disk = disk_offsets(radius);
    let mut out = GrayImage::filled(w, h, 0);
    for y in 0..h {
        for x in 0..w {
            if !img.is_white(x, y) {
                continue;
            }
            for &(dx, dy) in &disk {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    out.set(nx as usize, ny as usize, 255);
                }
            }
        }
    }
    BinaryImage::from_gray_unchecked(out)
}
