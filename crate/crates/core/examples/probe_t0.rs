use slipwave::string::{StringParams, StringReduction};

fn main() {
    let red = StringReduction::new(StringParams::new(1.0, 0.03, 0.0, 0.4, 1).unwrap());
    let table = red.kernel_table().unwrap();
    println!("sample(0.0)  = {:.16}", table.sample(0.0));
    println!("sample(5e-4) = {:.16}", table.sample(5e-4));
    println!("sample(1e-3) = {:.16}", table.sample(1e-3));
    println!("kernel_l0(1e-3, 1e6) = {:.16}", red.kernel_l0(1.0, 1e-3, 1_000_000).unwrap().value);
    for k in [100usize, 1000, 10000] {
        println!("partial sum at t=0, K={k}: {:.6}", red.kernel_l0(1.0, 0.0, k).unwrap().value);
    }
    let at0 = red.kernel_l0(1.0, 0.0, 100).unwrap();
    println!("t=0 tail bound: {}", at0.tail_bound);
}
