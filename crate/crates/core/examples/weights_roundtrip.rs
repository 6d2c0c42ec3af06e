//! Save a layer, load it back, and see a damaged file get rejected.

use satnet::weights::{decode, encode, load, save};
use satnet::{Error, LayerConfig, SatLayer};

fn main() -> satnet::Result<()> {
    let layer = SatLayer::new(LayerConfig::new(5, 3, 6)?.with_seed(42))?;
    let dir = std::env::temp_dir().join("satnet-weights-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("layer.weights");
    save(&layer, &path)?;

    let back = load(&path)?;
    println!("{} bytes, identical after reload: {}", encode(&layer).len(), back.state() == layer.state());
    let z = [0.2, 0.9];
    let a = layer.forward(&[0, 1], &z)?.z_out;
    let b = back.forward(&[0, 1], &z)?.z_out;
    println!("same outputs: {}", a == b);

    let mut bytes = encode(&layer);
    bytes[100] ^= 0x10;
    match decode(&bytes) {
        Err(Error::CorruptFile(why)) => println!("flipped bit rejected: {why}"),
        other => println!("unexpected: {:?}", other.map(|_| ())),
    }
    Ok(())
}
