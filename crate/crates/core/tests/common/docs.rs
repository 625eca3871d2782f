//! Random value documents for the fixture schemas.

use rand::Rng;
use serde_json::{json, Value as Json};

pub type Gen = fn(&mut rand::rngs::StdRng) -> Json;

pub struct Case {
    pub file: &'static str,
    pub class: &'static str,
    pub gen: Gen,
}

pub fn cases() -> Vec<Case> {
    vec![
        Case { file: "hello_bits.fl", class: "HelloBits", gen: hello_bits },
        Case { file: "parsable.fl", class: "Aligned", gen: aligned },
        Case { file: "conditional.fl", class: "Either", gen: either },
        Case { file: "arrays.fl", class: "Dynamic", gen: dynamic },
        Case { file: "arrays.fl", class: "Partial", gen: partial },
        Case { file: "class_simple.fl", class: "Pair", gen: pair },
        Case { file: "class_params.fl", class: "Holder", gen: params },
        Case { file: "inherit_ids.fl", class: "Holder", gen: family },
        Case { file: "id_range.fl", class: "Slices", gen: slices },
        Case { file: "map_blocks.fl", class: "Chroma", gen: chroma },
        Case { file: "map_escape.fl", class: "Escaped", gen: escaped },
        Case { file: "isidof.fl", class: "Sequence", gen: sequence },
        Case { file: "lengthof.fl", class: "Growing", gen: growing },
        Case { file: "gif87a.fl", class: "GIF87a", gen: gif },
    ]
}

/// Values of a declaration that ran once per element of `v`, in the shape
/// `object_to_doc` produces.
fn rep(mut v: Json) -> Json {
    match v.as_array_mut() {
        Some(a) if a.len() == 1 => a.pop().unwrap(),
        _ => json!({"_repeat": v}),
    }
}

fn bits<R: Rng>(rng: &mut R, n: u32) -> u64 {
    rng.gen_range(0..1u64 << n)
}

fn hello_bits<R: Rng>(rng: &mut R) -> Json {
    json!({"Bits": bits(rng, 8)})
}

fn aligned<R: Rng>(rng: &mut R) -> Json {
    json!({"lead": bits(rng, 5), "a": bits(rng, 3)})
}

fn either<R: Rng>(rng: &mut R) -> Json {
    let a = if rng.gen_bool(0.5) { 1 } else { bits(rng, 8) };
    let b = if a == 1 { bits(rng, 16) } else { bits(rng, 24) };
    json!({"a": a, "b": b})
}

fn dynamic<R: Rng>(rng: &mut R) -> Json {
    let a = bits(rng, 5);
    let arr: Vec<u64> = (0..a).map(|_| bits(rng, 2)).collect();
    json!({"a": a, "A": arr})
}

fn partial<R: Rng>(rng: &mut R) -> Json {
    let row: Vec<u64> = (0..3).map(|_| bits(rng, 4)).collect();
    if rng.gen_bool(0.5) {
        json!({"A": {"_sparse": {"3": 1}}, "B": {"_sparse": {"2": row}}})
    } else {
        json!({"B": {"_sparse": {"2": row}}})
    }
}

fn simple<R: Rng>(rng: &mut R) -> Json {
    json!({"a": bits(rng, 3), "b": bits(rng, 4)})
}

fn pair<R: Rng>(rng: &mut R) -> Json {
    json!({"first": simple(rng), "second": simple(rng)})
}

fn params<R: Rng>(rng: &mut R) -> Json {
    let v = [bits(rng, 2), bits(rng, 2)];
    if rng.gen_bool(0.5) {
        json!({"v": v, "a": {"a": v[0], "b": v[1]}})
    } else {
        json!({"v": v})
    }
}

fn family_member<R: Rng>(rng: &mut R) -> Json {
    if rng.gen_bool(0.5) {
        json!({"_class": "A", "a": bits(rng, 2)})
    } else {
        json!({"_class": "B", "a": bits(rng, 2), "b": bits(rng, 3)})
    }
}

fn family<R: Rng>(rng: &mut R) -> Json {
    json!({"first": family_member(rng), "second": family_member(rng)})
}

fn slices<R: Rng>(rng: &mut R) -> Json {
    json!({
        "lead": bits(rng, 3),
        "s": {"slice_start_code": rng.gen_range(0x101..=0x1AF), "quantiser_scale": bits(rng, 5)},
    })
}

fn chroma<R: Rng>(rng: &mut R) -> Json {
    let (u, v) = [(1, 1), (2, 2), (4, 4)][rng.gen_range(0..3)];
    json!({"chroma_format": {"Yblocks": 4, "Ublocks": u, "Vblocks": v}})
}

fn escaped<R: Rng>(rng: &mut R) -> Json {
    json!({"first": bits(rng, 5), "second": rng.gen_range(1..=2), "third": bits(rng, 5)})
}

fn sequence<R: Rng>(rng: &mut R) -> Json {
    let n = rng.gen_range(0..6);
    let mut ids = Vec::new();
    let mut elems = serde_json::Map::new();
    for i in 0..n {
        let e = if rng.gen_bool(0.5) {
            ids.push(1);
            json!({"_class": "A1", "x": bits(rng, 4), "y": bits(rng, 4)})
        } else {
            let id = rng.gen_range(2..=3);
            ids.push(id);
            json!({"_class": "A2", "id": id, "z": bits(rng, 8)})
        };
        elems.insert(i.to_string(), e);
    }
    ids.push(0xFF);
    let mut doc = json!({"id": rep(json!(ids))});
    if n > 0 {
        doc["a"] = json!({"_sparse": elems});
    }
    doc
}

fn growing<R: Rng>(rng: &mut R) -> Json {
    let a: Vec<u64> = (1..=5).map(|k| bits(rng, k)).collect();
    json!({"a": a})
}

fn sub_blocks<R: Rng>(rng: &mut R) -> Json {
    let mut counts = Vec::new();
    let mut data = Vec::new();
    for _ in 0..rng.gen_range(0..3) {
        let n = rng.gen_range(1..=12);
        counts.push(n);
        data.push((0..n).map(|_| bits(rng, 8)).collect::<Vec<_>>());
    }
    counts.push(0);
    data.push(Vec::new());
    json!({"count": rep(json!(counts)), "data": rep(json!(data))})
}

fn color_map<R: Rng>(rng: &mut R, bpp: u64) -> Json {
    let rgb: Vec<Vec<u64>> = (0..1u64 << (bpp + 1)).map(|_| (0..3).map(|_| bits(rng, 8)).collect()).collect();
    json!({"rgb": rgb})
}

fn gif<R: Rng>(rng: &mut R) -> Json {
    let gcm = rng.gen_bool(0.7) as u64;
    let bpp = bits(rng, 2);
    let mut sd = json!({
        "width": bits(rng, 16), "height": bits(rng, 16), "global_color_map": gcm,
        "color_resolution": bits(rng, 3), "bits_per_pixel": bpp, "background": bits(rng, 8),
    });
    if gcm == 1 {
        sd["colors"] = color_map(rng, bpp);
    }
    let (mut ends, mut images, mut exts) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..rng.gen_range(0..4) {
        match rng.gen_range(0..3) {
            0 => {
                ends.push(b',' as u64);
                let lcm = rng.gen_bool(0.3) as u64;
                let bpp = bits(rng, 2);
                let mut id = json!({
                    "left": bits(rng, 16), "top": bits(rng, 16), "width": bits(rng, 16), "height": bits(rng, 16),
                    "local_color_map": lcm, "interlaced": bits(rng, 1), "bits_per_pixel": bpp,
                    "code_size": rng.gen_range(2..=8), "raster": sub_blocks(rng),
                });
                if lcm == 1 {
                    id["colors"] = color_map(rng, bpp);
                }
                images.push(id);
            }
            1 => {
                ends.push(b'!' as u64);
                exts.push(json!({"function": bits(rng, 8), "body": sub_blocks(rng)}));
            }
            // any other byte is skipped
            _ => ends.push(*[0u8, b'x', 0xFF].get(rng.gen_range(0..3)).unwrap() as u64),
        }
    }
    ends.push(b';' as u64);
    let mut doc = json!({"GIFsignature": "GIF87a", "sd": sd, "end": rep(json!(ends))});
    if !images.is_empty() {
        doc["id"] = rep(json!(images));
    }
    if !exts.is_empty() {
        doc["eb"] = rep(json!(exts));
    }
    doc
}
