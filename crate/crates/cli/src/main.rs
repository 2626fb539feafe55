fn main() {
    // Subcommands are wired up once the library surface is complete.
    eprintln!("wavint: no command given");
    std::process::exit(2);
}
