#include "cli.hpp"

#include "run_config.hpp"

#include <prefchain/behavior_graph.hpp>
#include <prefchain/city.hpp>
#include <prefchain/error.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/metrics.hpp>
#include <prefchain/mobility_sim.hpp>
#include <prefchain/pipeline.hpp>
#include <prefchain/version.hpp>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace prefchain::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool mock_llm = false;
    bool mock_embed = false;
    std::string out;
    std::string reference;
    std::string validation;
    std::string city;
    std::string spec;
    std::string query;
    std::string reference_tally;
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> seeds;
    std::optional<std::size_t> agents;
    std::optional<std::size_t> population;
    bool baselines = false;
    std::size_t grid_width = 20;
    std::size_t grid_height = 20;
    std::size_t pois_per_category = 10;
};

RunConfig resolve(const Overrides &o) {
    RunConfig c = o.config.empty() ? RunConfig{} : RunConfig::load(o.config);
    if (const char *url = std::getenv("PC_LLM_URL"); url != nullptr && *url != '\0') {
        c.providers.llm_url = url;
        c.providers.mock_llm = false;
    }
    if (const char *url = std::getenv("PC_EMBED_URL"); url != nullptr && *url != '\0') {
        c.providers.embed_url = url;
        c.providers.mock_embed = false;
    }
    if (o.mock_llm) {
        c.providers.mock_llm = true;
    }
    if (o.mock_embed) {
        c.providers.mock_embed = true;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    const auto set_path = [](fs::path &target, const std::string &value) {
        if (!value.empty()) {
            target = value;
        }
    };
    set_path(c.output_dir, o.out);
    set_path(c.reference_csv, o.reference);
    set_path(c.validation_csv, o.validation);
    set_path(c.city, o.city);
    set_path(c.synthetic_spec, o.spec);
    set_path(c.query, o.query);
    set_path(c.simulate.reference_tally, o.reference_tally);
    if (!o.sizes.empty()) {
        c.sweep_sizes = o.sizes;
    }
    if (!o.seeds.empty()) {
        c.sweep_seeds = o.seeds;
    }
    if (o.agents) {
        c.simulate.agents = *o.agents;
    }
    if (o.baselines) {
        c.baselines = true;
    }
    c.validate();
    return c;
}

fs::path require_path(const fs::path &p, std::string_view what) {
    if (p.empty()) {
        throw ConfigError(fmt::format("no {} configured", what));
    }
    if (!fs::exists(p)) {
        throw ConfigError(fmt::format("{} '{}' does not exist", what, p.string()));
    }
    return p;
}

std::ofstream open_output(const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    }
    return out;
}

fs::path prepare_output(const RunConfig &c) {
    fs::create_directories(c.output_dir);
    return c.output_dir;
}

void write_manifest(const RunConfig &c, std::string_view command, const Providers *providers,
                    std::uint64_t seed) {
    ordered_json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config_hash"] = c.hash();
    m["seed"] = seed;
    if (providers != nullptr) {
        m["providers"] = {{"embedding", providers->embedder->id()}, {"llm", providers->llm->id()}};
    }
    m["components"] = {{"prefchain", kVersion},
                       {"synthetic_spec_version", SyntheticSpec::kVersion}};
    auto cfg = c.to_json();
    cfg.erase("output_dir");
    m["config"] = cfg;
    auto out = open_output(c.output_dir / "manifest.json");
    out << m.dump(2) << '\n';
}

std::vector<TripRecord> load_records(const fs::path &path, std::string_view what) {
    return read_csv(require_path(path, what));
}

std::vector<TripRecord> load_reference(const RunConfig &c) {
    auto records = load_records(c.reference_csv, "reference CSV");
    if (records.empty()) {
        throw EmptyReference(
            fmt::format("reference CSV '{}' has no records", c.reference_csv.string()));
    }
    return records;
}

int cmd_build_graph(const RunConfig &c, std::ostream &out) {
    const auto records = load_reference(c);
    const auto graph = build_from_records(records, GraphBuildConfig{});
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "graph.jsonl");
        write_snapshot(graph, file);
    }
    write_manifest(c, "build-graph", nullptr, c.seed);
    out << fmt::format("nodes {} (persons {}, desires {}, intentions {}), edges {}\n",
                       graph.node_count(), graph.count(NodeKind::Person),
                       graph.count(NodeKind::Desire), graph.count(NodeKind::Intention),
                       graph.edge_count());
    return 0;
}

QueryAgent read_query(const fs::path &path) {
    std::ifstream in(require_path(path, "query file"));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw ParseFailure(fmt::format("query file is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("profile") || !doc["profile"].is_object()) {
        throw ParseFailure("query needs a \"profile\" object");
    }
    QueryAgent q;
    for (auto field : schema::kProfileFields) {
        const std::string key(field);
        if (!doc["profile"].contains(key) || !doc["profile"][key].is_string()) {
            throw SchemaViolation(0, key, "");
        }
        q.profile.field(field) = doc["profile"][key].get<std::string>();
    }
    q.profile.validate();
    if (!doc.contains("desire") || !doc["desire"].is_object()) {
        throw ParseFailure("query needs a \"desire\" object");
    }
    const auto &d = doc["desire"];
    if (!d.contains("trip_purpose") || !d["trip_purpose"].is_string()) {
        throw SchemaViolation(0, std::string(schema::kTripPurpose), "");
    }
    if (!d.contains("start_time") || !d["start_time"].is_number_integer()) {
        throw SchemaViolation(0, std::string(schema::kStartTime), "");
    }
    q.desire = {d["trip_purpose"].get<std::string>(), d["start_time"].get<int>()};
    q.desire.validate();
    if (doc.contains("context")) {
        if (!doc["context"].is_string()) {
            throw ParseFailure("query \"context\" must be a string");
        }
        q.context = doc["context"].get<std::string>();
    }
    return q;
}

ordered_json distribution_json(const PreferenceDistribution &d) {
    ordered_json j = ordered_json::object();
    for (std::size_t i = 0; i < d.choice_set().size(); ++i) {
        j[d.choice_set().options()[i]] = d.probabilities()[i];
    }
    return j;
}

int cmd_predict(const RunConfig &c, std::ostream &out) {
    const auto query = read_query(c.query);
    const auto records = load_reference(c);
    const auto graph = build_from_records(records, GraphBuildConfig{});
    const auto providers = make_providers(c.providers);
    const PreferenceChain chain(graph, *providers.embedder, *providers.llm, c.pipeline);
    const auto decisions = chain.decide_all(query);
    ordered_json result;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto &d = decisions[i];
        result[graph.choice_sets()[i].name()] = {
            {"prior", distribution_json(d.prior)},
            {"posterior", distribution_json(d.posterior())},
            {"degenerate", d.prior.degenerate()},
            {"source", std::string(to_string(d.calibration.source))},
        };
    }
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "prediction.json");
        file << result.dump(2) << '\n';
    }
    write_manifest(c, "predict", &providers, c.seed);
    out << result.dump(2) << '\n';
    return 0;
}

EvaluationOptions evaluation_options(const RunConfig &c) {
    EvaluationOptions opts;
    opts.pipeline = c.pipeline;
    opts.include_baselines = c.baselines;
    return opts;
}

int cmd_evaluate(const RunConfig &c, std::ostream &out) {
    const auto reference = load_reference(c);
    const auto validation = load_records(c.validation_csv, "validation CSV");
    const auto providers = make_providers(c.providers);
    const auto reports = evaluate(reference, validation, *providers.embedder, *providers.llm,
                                  evaluation_options(c), c.seed);
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "report.csv");
        write_report_csv(reports, file);
    }
    {
        auto file = open_output(dir / "report.json");
        write_report_json(reports, file);
    }
    write_manifest(c, "evaluate", &providers, c.seed);
    for (const auto &r : reports) {
        out << fmt::format("{}: mean KLD {:.6f}, mean MAE {:.6f}\n", r.predictor, r.mean_kld(),
                           r.mean_mae());
    }
    return 0;
}

int cmd_sweep(const RunConfig &c, std::ostream &out) {
    const auto pool = load_reference(c);
    const auto validation = load_records(c.validation_csv, "validation CSV");
    const auto providers = make_providers(c.providers);
    const auto rows = sweep(pool, validation, c.sweep_sizes, c.sweep_seeds, *providers.embedder,
                            *providers.llm, evaluation_options(c));
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "sweep.csv");
        write_sweep_csv(rows, file);
    }
    write_manifest(c, "sweep", &providers, c.seed);
    out << fmt::format("{} sweep rows written to {}\n", rows.size(),
                       (dir / "sweep.csv").string());
    return 0;
}

SyntheticSpec load_spec(const RunConfig &c) {
    if (c.synthetic_spec.empty()) {
        return default_synthetic_spec();
    }
    return read_synthetic_spec(require_path(c.synthetic_spec, "synthetic spec"));
}

int cmd_simulate(const RunConfig &c, std::ostream &out) {
    const auto city = read_city(require_path(c.city, "city file"));
    const auto records = load_reference(c);
    const auto spec = load_spec(c);
    const auto graph = build_from_records(records, GraphBuildConfig{});
    const auto providers = make_providers(c.providers);
    const PreferenceChain chain(graph, *providers.embedder, *providers.llm, c.pipeline);

    const auto profiles = generate_profiles(c.simulate.agents, spec, c.seed);
    auto agents = init_agents(profiles, city, c.seed);
    std::unique_ptr<ScheduleProvider> scheduler;
    if (c.simulate.schedule == "llm") {
        scheduler = std::make_unique<LlmScheduleProvider>(*providers.llm, c.pipeline.generation);
    } else {
        scheduler = std::make_unique<TemplateScheduleProvider>();
    }
    std::vector<DayPlan> plans;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        plans.push_back(generate_schedule(profiles[i], *scheduler, c.seed, i));
    }
    SimulationOptions options;
    options.seed = c.seed;
    options.max_in_flight = c.pipeline.max_in_flight;
    options.poi_generation = c.pipeline.generation;
    const auto day = run_day(std::move(agents), plans, city, chain, *providers.llm, options);

    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "tally.csv");
        write_tally_csv(day.tally, file);
    }
    {
        auto file = open_output(dir / "trips.csv");
        file << "agent,plan_hour,purpose,mode,duration_minutes,poi,depart_minute,arrive_minute,"
                "edges\n";
        for (const auto &t : day.trips) {
            file << fmt::format("{},{},{},{},{},{},{},{},{}\n", t.agent, t.plan_hour, t.purpose,
                                t.mode, t.duration, t.poi, t.depart_minute, t.arrive_minute,
                                t.edges.size());
        }
    }
    std::ostringstream summary;
    summary << "metric,value\n";
    summary << fmt::format("agents,{}\n", day.agents.size());
    summary << fmt::format("trips,{}\n", day.trips.size());
    summary << fmt::format("edge_traversals,{}\n", day.tally.total_traversals());
    summary << fmt::format("poi_visits,{}\n", day.tally.total_visits());
    if (!c.simulate.reference_tally.empty()) {
        std::ifstream in(require_path(c.simulate.reference_tally, "reference tally"));
        const auto reference = read_tally_csv(in, city.edges().size(), city.pois().size());
        const auto k = flow_kld(day.tally, reference);
        const auto cell = [](const std::optional<double> &v) {
            return v ? fmt::format("{:.10g}", *v) : std::string("NA");
        };
        summary << "traffic_kld," << cell(k.traffic) << '\n';
        summary << "poi_kld," << cell(k.poi) << '\n';
    }
    {
        auto file = open_output(dir / "summary.csv");
        file << summary.str();
    }
    write_manifest(c, "simulate", &providers, c.seed);
    out << summary.str();
    return 0;
}

int cmd_gen_synth(const RunConfig &c, const Overrides &o, std::ostream &out) {
    auto spec = load_spec(c);
    if (o.seed) {
        spec.seed = *o.seed;
    }
    if (o.population) {
        spec.population = *o.population;
    }
    const auto records = generate_synthetic(spec);
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "synthetic.csv");
        write_csv(records, file);
    }
    {
        auto file = open_output(dir / "synthetic_spec.json");
        write_synthetic_spec(spec, file);
    }
    write_manifest(c, "gen-synth", nullptr, spec.seed);
    out << fmt::format("{} records written to {}\n", records.size(),
                       (dir / "synthetic.csv").string());
    return 0;
}

int cmd_gen_city(const RunConfig &c, const Overrides &o, std::ostream &out) {
    GridCityOptions options;
    options.width = o.grid_width;
    options.height = o.grid_height;
    options.pois_per_category = o.pois_per_category;
    options.seed = c.seed;
    const auto city = generate_grid_city(options);
    const auto dir = prepare_output(c);
    {
        auto file = open_output(dir / "city.json");
        write_city(city, file);
    }
    write_manifest(c, "gen-city", nullptr, c.seed);
    out << fmt::format("city with {} nodes, {} edges, {} POIs written to {}\n",
                       city.nodes().size(), city.edges().size(), city.pois().size(),
                       (dir / "city.json").string());
    return 0;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Preference Chain: graph-retrieval choice modeling and mobility simulation",
                 "prefchain"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    app.add_option("--config", o.config, "Run configuration JSON");
    app.add_option("--seed", o.seed, "Root seed");
    app.add_flag("--mock-llm", o.mock_llm, "Use the identity mock language model");
    app.add_flag("--mock-embed", o.mock_embed, "Use the hash embedding");
    app.add_option("--out", o.out, "Output directory");
    app.add_option("--reference", o.reference, "Reference CSV");
    app.add_option("--validation", o.validation, "Validation CSV");
    app.add_option("--city", o.city, "City JSON");
    app.add_option("--spec", o.spec, "Synthetic population spec JSON");

    auto *build = app.add_subcommand("build-graph", "Build and snapshot the behavior graph");
    auto *predict = app.add_subcommand("predict", "Prior and posterior for one query agent");
    predict->add_option("--query", o.query, "Query JSON with profile, desire and context");
    auto *eval = app.add_subcommand("evaluate", "KLD/MAE of simulated choices vs validation");
    eval->add_flag("--baselines", o.baselines, "Add uniform and marginal predictors");
    auto *sw = app.add_subcommand("sweep", "Metrics across reference sample sizes");
    sw->add_option("--sizes", o.sizes, "Reference sizes")->delimiter(',');
    sw->add_option("--seeds", o.seeds, "Resampling seeds")->delimiter(',');
    auto *sim = app.add_subcommand("simulate", "One simulated day on a city");
    sim->add_option("--agents", o.agents, "Number of agents");
    sim->add_option("--reference-tally", o.reference_tally, "Tally CSV to compare against");
    auto *synth = app.add_subcommand("gen-synth", "Write a synthetic population CSV");
    synth->add_option("--population", o.population, "Override the spec population");
    auto *city = app.add_subcommand("gen-city", "Write a grid city JSON");
    city->add_option("--width", o.grid_width, "Grid columns")->check(CLI::PositiveNumber);
    city->add_option("--height", o.grid_height, "Grid rows")->check(CLI::PositiveNumber);
    city->add_option("--pois-per-category", o.pois_per_category, "POIs per trip purpose");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        const RunConfig config = resolve(o);
        if (build->parsed()) return cmd_build_graph(config, out);
        if (predict->parsed()) return cmd_predict(config, out);
        if (eval->parsed()) return cmd_evaluate(config, out);
        if (sw->parsed()) return cmd_sweep(config, out);
        if (sim->parsed()) return cmd_simulate(config, out);
        if (synth->parsed()) return cmd_gen_synth(config, o, out);
        if (city->parsed()) return cmd_gen_city(config, o, out);
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError &e) {
        err << "data error: " << e.what() << '\n';
        return 3;
    } catch (const ProviderError &e) {
        err << "provider error: " << e.what() << '\n';
        return 4;
    } catch (const fs::filesystem_error &e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace prefchain::cli
