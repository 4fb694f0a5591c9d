use cwboost::alloc_counter::CountingAlloc;

#[global_allocator]
static ALLOC: CountingAlloc = CountingAlloc;

fn main() {
    std::process::exit(cwboost::cli::run(std::env::args_os()));
}
