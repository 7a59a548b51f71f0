fn main() {
    println!("abdd cli placeholder");
}
