#include "cli.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kgval/backend.hpp"
#include "kgval/cache.hpp"
#include "kgval/datasets.hpp"
#include "kgval/error.hpp"
#include "kgval/evaluation.hpp"
#include "kgval/pipeline.hpp"
#include "kgval/providers.hpp"
#include "kgval/tables.hpp"

namespace kgval::cli {

namespace fs = std::filesystem;

namespace {

struct RunOptions {
    std::string validator = "world";
    std::string model = "gpt-3.5-turbo-0125";
    std::string endpoint = "https://api.openai.com/v1";
    std::size_t k = 4;
    std::size_t web_results = 5;
    std::string cache_dir;
    std::string out;
    int concurrency = 4;
    std::string backend = "openai";
    std::string mock_script;
    std::string fixtures;
    std::vector<std::string> corpus;
    std::string embedder = "hash";
    std::string embed_endpoint = "https://api.openai.com/v1";
    std::string embed_model = "text-embedding-3-small";
    std::string wikidata_api;
    std::string wikipedia_api;
    std::string search_endpoint;
    int max_retries = 3;
    double temperature = 0.0;
    std::size_t chunk_size = 1000;
    std::size_t chunk_overlap = 200;
    std::string config_file;
};

struct EvaluateOptions {
    std::string dataset;
    std::string format = "tsv";
    std::size_t sample_n = 150;
    std::uint64_t seed = kDefaultSeed;
    bool balanced = false;
    std::string abstain = "invalid";
    std::string report;
};

void add_run_options(CLI::App& cmd, RunOptions& o) {
    cmd.add_option("--validator", o.validator,
                   "world, corpus, wikidata, web, wikidata-web or wikipedia-wikidata");
    cmd.add_option("--model", o.model, "Chat model name");
    cmd.add_option("--endpoint", o.endpoint, "Base URL of an OpenAI-compatible API");
    cmd.add_option("--k", o.k, "Context chunks per triple");
    cmd.add_option("--web-results", o.web_results, "Search results fetched per triple");
    cmd.add_option("--cache-dir", o.cache_dir, "Disk cache for external requests");
    cmd.add_option("--out", o.out, "Output JSONL path ('-' for stdout)");
    cmd.add_option("--concurrency", o.concurrency, "Triples validated in parallel");
    cmd.add_option("--backend", o.backend, "openai or mock");
    cmd.add_option("--mock-script", o.mock_script, "Canned responses for --backend mock");
    cmd.add_option("--fixtures", o.fixtures, "Serve external requests from a routes manifest");
    cmd.add_option("--corpus", o.corpus, "Corpus file or directory (repeatable)");
    cmd.add_option("--embedder", o.embedder, "hash or remote");
    cmd.add_option("--embed-endpoint", o.embed_endpoint, "Base URL of the embeddings API");
    cmd.add_option("--embed-model", o.embed_model, "Embedding model name");
    cmd.add_option("--wikidata-api", o.wikidata_api, "Wikidata api.php URL");
    cmd.add_option("--wikipedia-api", o.wikipedia_api, "Wikipedia api.php URL");
    cmd.add_option("--search-endpoint", o.search_endpoint, "Web search endpoint");
    cmd.add_option("--max-retries", o.max_retries, "Schema re-asks per triple");
    cmd.add_option("--temperature", o.temperature, "Sampling temperature");
    cmd.add_option("--chunk-size", o.chunk_size, "Maximum chunk length in bytes");
    cmd.add_option("--chunk-overlap", o.chunk_overlap, "Overlap between hard-cut chunks");
    cmd.add_option("--config", o.config_file, "key = value file with defaults for any option");
}

std::string env_name(const std::string& long_name) {
    std::string out = "KGVAL_";
    for (char c : long_name) out += c == '-' ? '_' : static_cast<char>(std::toupper(c));
    return out;
}

std::multimap<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::multimap<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        out.emplace(key, trim(line.substr(eq + 1)));
    }
    return out;
}

// Fills options not given on the command line: environment (KGVAL_<NAME>) first,
// then the config file.
void apply_defaults(CLI::App& cmd, const std::string& config_file) {
    std::multimap<std::string, std::string> file;
    if (!config_file.empty()) file = read_config_file(config_file);
    for (CLI::Option* opt : cmd.get_options()) {
        if (opt->count() > 0 || opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        std::vector<std::string> values;
        if (const char* env = std::getenv(env_name(name).c_str()); env && *env) {
            values.emplace_back(env);
        } else {
            auto [b, e] = file.equal_range(name);
            for (auto it = b; it != e; ++it) values.push_back(it->second);
        }
        if (values.empty()) continue;
        for (auto& v : values) opt->add_result(v);
        opt->run_callback();
    }
    for (const auto& [key, value] : file) {
        if (!cmd.get_option_no_throw("--" + key)) throw ConfigError("unknown config key '" + key + "'");
    }
}

std::string read_all(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    return read_all(in);
}

std::vector<std::string> load_mock_script(const std::string& path) {
    const std::string text = read_file(path);
    auto as_raw = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    std::vector<std::string> script;
    auto whole = nlohmann::json::parse(text, nullptr, false);
    if (!whole.is_discarded() && whole.is_array()) {
        for (const auto& v : whole) script.push_back(as_raw(v));
        return script;
    }
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto v = nlohmann::json::parse(line, nullptr, false);
        if (v.is_discarded()) throw ConfigError(path + ":" + std::to_string(line_no) + ": not JSON");
        script.push_back(as_raw(v));
    }
    return script;
}

struct Pipeline {
    std::shared_ptr<ChatBackend> backend;
    std::shared_ptr<ContextService> context;
    BackendConfig backend_config;
    int concurrency = 1;
};

Pipeline build_pipeline(const RunOptions& o, std::ostream& err) {
    Pipeline p;
    p.backend_config.endpoint_url = o.endpoint;
    p.backend_config.model_name = o.model;
    p.backend_config.temperature = o.temperature;
    p.backend_config.max_retries = o.max_retries;
    p.backend_config.max_in_flight = std::max(1, o.concurrency);
    p.backend_config.validate();
    p.concurrency = std::max(1, o.concurrency);

    const auto kind = provider_kind_from_string(o.validator);
    if (!kind) throw ConfigError("unknown validator '" + o.validator + "'");
    ProviderConfig pc;
    pc.kind = *kind;
    pc.k = o.k;
    pc.web_results = o.web_results;
    for (const auto& c : o.corpus) pc.corpus_paths.emplace_back(c);
    if (!o.cache_dir.empty()) pc.cache_dir = fs::path(o.cache_dir);

    std::shared_ptr<HttpTransport> net = std::make_shared<NetworkTransport>();
    std::shared_ptr<HttpTransport> external = net;
    if (!o.fixtures.empty()) external = std::make_shared<FixtureTransport>(o.fixtures);

    std::shared_ptr<EmbeddingProvider> embedder;
    if (o.embedder == "hash") {
        embedder = std::make_shared<HashEmbeddingProvider>();
    } else if (o.embedder == "remote") {
        embedder = std::make_shared<RemoteEmbeddingProvider>(o.embed_endpoint, o.embed_model, net);
    } else {
        throw ConfigError("unknown embedder '" + o.embedder + "'");
    }

    ServiceEndpoints endpoints;
    if (!o.wikidata_api.empty()) endpoints.wikidata_api = o.wikidata_api;
    if (!o.wikipedia_api.empty()) endpoints.wikipedia_api = o.wikipedia_api;
    if (!o.search_endpoint.empty()) endpoints.search_endpoint = o.search_endpoint;

    ChunkingConfig chunking;
    chunking.max_chunk_chars = o.chunk_size;
    chunking.overlap_chars = o.chunk_overlap;

    p.context = std::make_shared<ContextService>(pc, external, embedder, endpoints, chunking);

    if (o.backend == "mock") {
        if (o.mock_script.empty()) throw ConfigError("--backend mock needs --mock-script");
        p.backend = std::make_shared<MockBackend>(load_mock_script(o.mock_script));
        if (p.concurrency > 1) {
            err << "note: the mock backend replays its script in order; running with concurrency 1\n";
            p.concurrency = 1;
        }
    } else if (o.backend == "openai") {
        p.backend = std::make_shared<OpenAIChatBackend>(p.backend_config, net);
    } else {
        throw ConfigError("unknown backend '" + o.backend + "'");
    }
    return p;
}

class OutputFile {
public:
    OutputFile(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw ConfigError("cannot write " + path);
            stream_ = &file_;
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

int retry_exit_code(const std::vector<TripleResult>& results, std::ostream& err) {
    std::size_t failed = 0;
    for (const auto& r : results) failed += r.validated ? 0 : 1;
    if (failed > 0) err << failed << " of " << results.size() << " triples exhausted their retries\n";
    return failed * 10 > results.size() ? 2 : 0;
}

int cmd_validate(const RunOptions& o, const std::string& input, std::istream& in, std::ostream& out,
                 std::ostream& err) {
    const std::string text = input.empty() || input == "-" ? read_all(in) : read_file(input);
    const auto triples = parse_triples_jsonl(text);
    Pipeline p = build_pipeline(o, err);
    Validator validator(p.context, p.backend, p.backend_config);
    const auto results = validator.validate_all(triples, p.concurrency);

    OutputFile sink(o.out, out);
    for (const auto& r : results) *sink << result_json(r).dump() << '\n';
    return retry_exit_code(results, err);
}

int cmd_evaluate(const RunOptions& o, const EvaluateOptions& e, std::ostream& out, std::ostream& err) {
    if (e.dataset.empty()) throw ConfigError("--dataset is required");
    const auto policy = abstain_policy_from_string(e.abstain);
    if (!policy) throw ConfigError("--abstain must be 'invalid' or 'exclude'");
    if (e.sample_n == 0) throw ConfigError("--sample-n must be at least 1");

    const auto records = load_dataset(e.dataset, dataset_format_from_string(e.format));
    const auto subset = e.balanced ? sample_balanced(records, e.sample_n, e.seed)
                                   : sample_subset(records, e.sample_n, e.seed);

    std::vector<Triple> triples;
    for (const auto& r : subset) triples.push_back(r.triple);
    Pipeline p = build_pipeline(o, err);
    Validator validator(p.context, p.backend, p.backend_config);
    const auto results = validator.validate_all(triples, p.concurrency);

    std::vector<RecordOutcome> outcomes;
    {
        const std::string out_path = o.out.empty() ? "results.jsonl" : o.out;
        OutputFile sink(out_path, out);
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            auto line = result_json(r, subset[i].record_id);
            line["label"] = *subset[i].triple.gold_label();
            *sink << line.dump() << '\n';
            outcomes.push_back(RecordOutcome{
                subset[i].record_id,
                r.validated ? std::optional<Verdict>(r.validated->verdict) : std::nullopt,
                *subset[i].triple.gold_label(), r.fallback_used});
        }
    }

    const EvalReport report = evaluate(std::move(outcomes), *policy);
    const std::string dataset_name = subset.empty() ? fs::path(e.dataset).stem().string()
                                                    : subset.front().dataset_name;
    nlohmann::json config{{"validator", std::string(to_string(p.context->config().kind))},
                          {"k", o.k},
                          {"web_results", o.web_results},
                          {"sample_n", e.sample_n},
                          {"seed", e.seed},
                          {"balanced", e.balanced},
                          {"max_retries", o.max_retries},
                          {"temperature", o.temperature},
                          {"embedder", o.embedder},
                          {"chunk_size", o.chunk_size},
                          {"chunk_overlap", o.chunk_overlap},
                          {"backend", o.backend}};
    const auto summary = report_json(report, dataset_name, config["validator"], o.model, config);

    std::string report_path = e.report;
    if (report_path.empty()) {
        report_path = (o.out.empty() || o.out == "-") ? "report.json" : o.out + ".report.json";
    }
    {
        OutputFile sink(report_path, out);
        *sink << summary.dump(2) << '\n';
    }

    const auto& c = report.counts;
    out << dataset_name << " " << config["validator"].get<std::string>() << " "
        << format_metrics(report.metrics) << " (tp=" << c.tp << " fp=" << c.fp << " tn=" << c.tn
        << " fn=" << c.fn << " abstained=" << c.abstained << ")\n";
    return retry_exit_code(results, err);
}

std::vector<TableRow> load_table_fixture(const std::string& path) {
    auto j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
    const auto& list = j.is_object() ? j.value("rows", nlohmann::json::array()) : j;
    if (!list.is_array()) throw ConfigError(path + " must hold an array of rows");
    std::vector<TableRow> rows;
    for (const auto& r : list) rows.push_back(table_row_from_json(r));
    return rows;
}

int cmd_check_tables(const std::string& fixture, bool rounding_aware, bool dump, std::ostream& out) {
    const std::vector<TableRow> rows = fixture.empty() ? published_table_rows() : load_table_fixture(fixture);
    if (dump) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) j.push_back(to_json(r));
        out << j.dump(2) << '\n';
        return 0;
    }
    auto label = [](const TableRow& r) { return r.table + " | " + r.model + " | " + r.dataset; };
    std::size_t bad = 0;
    if (rounding_aware) {
        for (const auto& r : rows) {
            if (!rounding_consistent(r)) {
                ++bad;
                out << "inconsistent: " << label(r) << " P=" << r.precision << " R=" << r.recall
                    << " F1=" << r.f1 << '\n';
            }
        }
    } else {
        for (const auto& v : table_consistency_check(rows)) {
            ++bad;
            char buf[160];
            std::snprintf(buf, sizeof(buf), " P=%.2f R=%.2f F1=%.2f implied=%.4f deviation=%.4f",
                          v.row.precision, v.row.recall, v.row.f1, v.implied_f1, v.deviation);
            out << "violation: " << label(v.row) << buf << '\n';
        }
    }
    out << rows.size() << " rows checked, " << bad << (bad == 1 ? " violation" : " violations")
        << (rounding_aware ? " (rounding-aware)" : "") << '\n';
    return bad == 0 ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"kgval: validate knowledge-graph triples with a language model", "kgval"};
    app.require_subcommand(1);

    RunOptions validate_opts;
    std::string input;
    auto* validate = app.add_subcommand("validate", "Validate triples read from JSONL");
    add_run_options(*validate, validate_opts);
    validate->add_option("--input", input, "Triples JSONL ('-' or omitted for stdin)");

    RunOptions evaluate_opts;
    EvaluateOptions eval;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Validate a labelled dataset sample and score it");
    add_run_options(*evaluate_cmd, evaluate_opts);
    evaluate_cmd->add_option("--dataset", eval.dataset, "Labelled dataset file");
    evaluate_cmd->add_option("--format", eval.format, "tsv or jsonl");
    evaluate_cmd->add_option("--sample-n", eval.sample_n, "Records sampled from the dataset");
    evaluate_cmd->add_option("--seed", eval.seed, "Sampling seed");
    evaluate_cmd->add_flag("--balanced", eval.balanced, "Sample positives and negatives equally");
    evaluate_cmd->add_option("--abstain", eval.abstain, "invalid or exclude");
    evaluate_cmd->add_option("--report", eval.report, "Summary report JSON path");

    std::string fixture;
    bool rounding_aware = false;
    bool dump = false;
    auto* check = app.add_subcommand("check-tables", "Check F1 = 2PR/(P+R) on published result rows");
    check->add_option("--fixture", fixture, "JSON rows to check instead of the embedded tables");
    check->add_flag("--rounding-aware", rounding_aware,
                    "Allow for two-decimal rounding of P and R as well as F1");
    check->add_flag("--dump", dump, "Print the embedded rows as JSON");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (validate->parsed()) {
            apply_defaults(*validate, validate_opts.config_file);
            return cmd_validate(validate_opts, input, in, out, err);
        }
        if (evaluate_cmd->parsed()) {
            apply_defaults(*evaluate_cmd, evaluate_opts.config_file);
            return cmd_evaluate(evaluate_opts, eval, out, err);
        }
        return cmd_check_tables(fixture, rounding_aware, dump, out);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace kgval::cli
