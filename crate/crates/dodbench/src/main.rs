use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dodbench::bench::{execute, load_dataset, BenchConfigFile, RunProtocol};
use dodbench::canonical;
use dodbench::datagen;
use dodbench::ingest::{ingest_stream, IngestOptions};
use dodbench::model::ScaleFactor;
use dodbench::oracle::{evaluate, selectivity, Dataset, EvalOptions, ResultSet};
use dodbench::query::{parse_spec_text, default_term_pool};
use dodbench::report;
use dodbench::translate::{translate, Dialect, TranslateOptions};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dodbench", version, about = "Document-database benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitFormat {
    Xml,
    Json,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleEmit {
    Rows,
    Count,
    Selectivity,
}

#[derive(Subcommand)]
enum Command {
    /// Stream publication XML into a canonical record file
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long, default_value_t = dodbench::ingest::DEFAULT_MAX_ELEMENT_BYTES)]
        max_element_bytes: usize,
    },
    /// Cut a scale-factor subset and emit XML/JSON document collections
    Datagen {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        sf: ScaleFactor,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "both")]
        format: EmitFormat,
        /// Output path; treated as a stem, `.xml` / `.jsonl` appended
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Evaluate a query exactly over a canonical file
    Oracle {
        #[arg(long)]
        data: PathBuf,
        /// Query spec text, e.g. Q2(i=1,j=2) or Q6
        #[arg(long)]
        query: String,
        /// Comma-separated term values for indices 1..=3
        #[arg(long, value_delimiter = ',')]
        terms: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "rows")]
        emit: OracleEmit,
        #[arg(long)]
        case_sensitive: bool,
    },
    /// Compile a query into a backend dialect
    Translate {
        #[arg(long)]
        query: String,
        #[arg(long)]
        dialect: Dialect,
        #[arg(long, value_delimiter = ',')]
        terms: Option<Vec<String>>,
        /// Directory to write main/setup texts into; stdout when absent
        #[arg(long = "out")]
        output: Option<PathBuf>,
        #[arg(long)]
        case_sensitive: bool,
        /// Print translation notes instead of query text
        #[arg(long)]
        explain: bool,
    },
    /// Execute queries against a configured live backend and record timings
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        backend: String,
        #[arg(long)]
        sf: ScaleFactor,
        /// Query spec texts, e.g. Q1(i=1),Q6
        #[arg(long, value_delimiter = ',')]
        queries: Vec<String>,
        #[arg(long, default_value_t = 10)]
        runs: u32,
        #[arg(long)]
        dialect: Dialect,
        #[arg(long, value_delimiter = ',')]
        terms: Option<Vec<String>>,
        /// Canonical file to bulk-load before running (skipped when absent)
        #[arg(long)]
        load: Option<PathBuf>,
        #[arg(long, default_value = "runs.csv")]
        out: PathBuf,
        #[arg(long)]
        case_sensitive: bool,
        #[arg(long, default_value_t = true)]
        cold_prefill: bool,
    },
    /// Summarize runs.csv into figure CSVs and optional plots
    Report {
        #[arg(long)]
        runs: PathBuf,
        /// Canonical file to compute companion selectivities from
        #[arg(long)]
        selectivity_data: Option<PathBuf>,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long)]
        plots: bool,
        #[arg(long, value_delimiter = ',')]
        terms: Option<Vec<String>>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { input, output, max_element_bytes } => {
            let reader = BufReader::new(File::open(&input).context("open input")?);
            let mut writer = BufWriter::new(File::create(&output).context("create output")?);
            let mut sink = |record| canonical::write_record(&mut writer, &record).map_err(std::io::Error::other);
            let stats = ingest_stream(reader, &mut sink, IngestOptions { max_element_bytes })?;
            writer.flush()?;
            eprintln!("accepted: {}", stats.records_accepted);
            eprintln!("skipped:  {}", stats.records_skipped);
            for (reason, count) in &stats.skip_reasons {
                eprintln!("  {reason}: {count}");
            }
            eprintln!("bytes read: {}", stats.bytes_read);
        }
        Command::Datagen { input, sf, seed, format, output } => {
            let records = canonical::read_records(&input)?;
            let picked = datagen::subset(&records, sf, seed);
            eprintln!("selected {} of {} records at sf={sf}", picked.len(), records.len());
            let stem = output.display().to_string();
            if matches!(format, EmitFormat::Xml | EmitFormat::Both) {
                let path = format!("{stem}.xml");
                let mut out = BufWriter::new(File::create(&path)?);
                datagen::emit_xml(&mut out, &picked)?;
                out.flush()?;
                eprintln!("wrote {path}");
            }
            if matches!(format, EmitFormat::Json | EmitFormat::Both) {
                let path = format!("{stem}.jsonl");
                let mut out = BufWriter::new(File::create(&path)?);
                datagen::emit_json(&mut out, &picked)?;
                out.flush()?;
                eprintln!("wrote {path}");
            }
        }
        Command::Oracle { data, query, terms, emit, case_sensitive } => {
            let dataset = Dataset::load(&data)?;
            let spec = parse_spec_text(&query, &terms.unwrap_or_else(default_term_pool))?;
            let rs = evaluate(&dataset, &spec, EvalOptions { case_sensitive });
            match emit {
                OracleEmit::Count => println!("{}", rs.row_count()),
                OracleEmit::Selectivity => {
                    let sel = selectivity(&dataset, &spec, &rs)?;
                    println!("n,N,s");
                    println!("{},{},{:.6}", sel.n, sel.population, sel.s);
                }
                OracleEmit::Rows => {
                    let mut out = csv::Writer::from_writer(std::io::stdout());
                    match &rs {
                        ResultSet::Titles(titles) => {
                            out.write_record(["title"])?;
                            for title in titles {
                                out.write_record([title])?;
                            }
                        }
                        ResultSet::Groups(groups) => {
                            out.write_record(["author", "year", "count"])?;
                            for (key, count) in groups {
                                out.write_record([
                                    key.author.as_str(),
                                    &key.year.map(|y| y.to_string()).unwrap_or_default(),
                                    &count.to_string(),
                                ])?;
                            }
                        }
                    }
                    out.flush()?;
                }
            }
        }
        Command::Translate { query, dialect, terms, output, case_sensitive, explain } => {
            let spec = parse_spec_text(&query, &terms.unwrap_or_else(default_term_pool))?;
            let options = TranslateOptions { case_sensitive };
            if explain {
                println!("{}", dodbench::translate::explain(&spec, dialect));
                return Ok(());
            }
            let tq = translate(&spec, dialect, options);
            match output {
                None => {
                    for setup in &tq.setup_texts {
                        eprintln!("-- setup: {}", setup.name);
                        eprintln!("{}", setup.text);
                    }
                    print!("{}", tq.main_text);
                }
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let stem = report::query_file_stem(&spec.canonical_text());
                    let main_path = dir.join(format!("{stem}.{}", dialect.extension()));
                    std::fs::write(&main_path, &tq.main_text)?;
                    eprintln!("wrote {}", main_path.display());
                    for setup in &tq.setup_texts {
                        let setup_path = dir.join(&setup.name);
                        std::fs::write(&setup_path, &setup.text)?;
                        eprintln!("wrote {}", setup_path.display());
                    }
                }
            }
        }
        Command::Bench {
            config,
            backend,
            sf,
            queries,
            runs,
            dialect,
            terms,
            load,
            out,
            case_sensitive,
            cold_prefill,
        } => {
            let config_text = std::fs::read_to_string(&config).context("read bench config")?;
            let parsed = BenchConfigFile::parse(&config_text)?;
            let Some(cfg) = parsed.backends.into_iter().find(|b| b.name == backend) else {
                bail!("backend {backend:?} not present in {}", config.display());
            };
            let cfg = cfg.with_env_overrides();
            let term_pool = terms.unwrap_or_else(default_term_pool);
            if let Some(data_path) = load {
                let records = canonical::read_records(&data_path)?;
                let mut docs = Vec::new();
                datagen::emit_json(&mut docs, &records)?;
                let elapsed = load_dataset(&cfg, &String::from_utf8(docs)?, records.len() as u64)?;
                eprintln!("loaded {} records in {:.3}s", records.len(), elapsed.as_secs_f64());
            }
            let protocol = RunProtocol { runs, cold_prefill };
            let mut all_runs = Vec::new();
            for query_text in &queries {
                let spec = parse_spec_text(query_text, &term_pool)?;
                let tq = translate(&spec, dialect, TranslateOptions { case_sensitive });
                eprintln!("running {} on {}", spec.canonical_text(), cfg.name);
                let records = execute(&cfg, &spec, sf, &tq, protocol)?;
                all_runs.extend(records);
            }
            dodbench::bench::write_runs_csv(&out, &all_runs)?;
            eprintln!("wrote {}", out.display());
        }
        Command::Report { runs, selectivity_data, output, plots, terms } => {
            let run_records = report::read_runs_csv(&runs)?;
            let stats = report::summarize(&run_records);
            let csvs = report::emit_figure_csv(&stats, &output)?;
            eprintln!("wrote {} figure CSVs", csvs.len());
            if let Some(data_path) = selectivity_data {
                let dataset = Dataset::load(&data_path)?;
                let term_pool = terms.unwrap_or_else(default_term_pool);
                let mut rows = Vec::new();
                let specs = [
                    "Q1(i=1)", "Q1(i=2)", "Q1(i=3)",
                    "Q2(i=1,j=2)", "Q2(i=1,j=3)", "Q2(i=2,j=3)",
                    "Q3(i=1,j=2)", "Q3(i=1,j=3)", "Q3(i=2,j=3)",
                    "Q4(i=1,j=2,k=3)", "Q5(i=1,j=2,k=3)",
                    "Q6", "Q7", "Q8(i=1,j=2,k=3)", "Q9(i=1,j=2,k=3)",
                ];
                for sf in ScaleFactor::ALL {
                    let picked = datagen::subset(dataset.records(), sf, 0);
                    let sub = Dataset::from_records(picked);
                    for spec_text in specs {
                        let spec = parse_spec_text(spec_text, &term_pool)?;
                        let rs = evaluate(&sub, &spec, EvalOptions::default());
                        if let Ok(sel) = selectivity(&sub, &spec, &rs) {
                            rows.push(report::SelectivityRow {
                                sf,
                                query: spec.canonical_text(),
                                s: sel.s,
                            });
                        }
                    }
                }
                report::emit_selectivity_csv(&rows, &output)?;
                eprintln!("wrote selectivity CSVs");
            }
            if plots {
                let images = report::emit_plots(&csvs, &output)?;
                eprintln!("wrote {} plots", images.len());
            }
        }
    }
    Ok(())
}
