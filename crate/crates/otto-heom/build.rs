fn main() {
    // lapack-sys declares the FFI symbols but links nothing; bind against the
    // system OpenBLAS, which bundles LAPACK.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
