fn main() {
    println!("dataltl");
}
