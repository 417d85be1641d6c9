fn main() -> anyhow::Result<()> {
    sbmt_amr::cli::run()
}
