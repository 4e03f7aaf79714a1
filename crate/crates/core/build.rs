fn main() {
    // dense nonsymmetric eigensolves go through the system LAPACK
    println!("cargo:rustc-link-lib=dylib=lapack");
}
