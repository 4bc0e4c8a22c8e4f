// sepscreen: command-line surface for the ED sepsis screening toolkit.
// Subcommands: synth, split, extract, screen, train, evaluate, compare,
// drift, heatmap. Every command is a pure function of (config, inputs, seed).

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepsis/cnlp.hpp"
#include "sepsis/config.hpp"
#include "sepsis/errors.hpp"
#include "sepsis/gbt.hpp"
#include "sepsis/labels.hpp"
#include "sepsis/metrics.hpp"
#include "sepsis/parallel.hpp"
#include "sepsis/pipeline.hpp"
#include "sepsis/protocols.hpp"
#include "sepsis/record.hpp"
#include "sepsis/rng.hpp"
#include "sepsis/stats_math.hpp"
#include "sepsis/synth.hpp"

using json = nlohmann::ordered_json;
using namespace sepsis;

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string dict_path;
    std::string icd_map_path;
    std::optional<uint64_t> seed;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--set", args.overrides, "config override key=value (repeatable)");
    cmd->add_option("--dict", args.dict_path, "concept dictionary TSV");
    cmd->add_option("--icd-map", args.icd_map_path, "ICD-10 sepsis map TSV");
    cmd->add_option("--seed", args.seed, "global seed (fans out per stage)");
    cmd->add_option("--threads", args.threads, "worker cap; never changes results");
}

RunConfig resolve_config(const CommonArgs& args) {
    Config cfg;
    if (!args.config_path.empty()) {
        cfg = Config::load(args.config_path);
    }
    cfg.apply_overrides(args.overrides);
    RunConfig rc = RunConfig::from_config(cfg);
    if (!args.dict_path.empty()) rc.dictionary_path = args.dict_path;
    if (!args.icd_map_path.empty()) rc.icd10_map_path = args.icd_map_path;
    if (args.seed) rc.seed = *args.seed;
    if (args.threads) rc.threads = *args.threads;
    if (rc.threads < 1) throw ValidationError("threads must be >= 1");
    return rc;
}

ConceptDictionary load_dictionary(const RunConfig& rc) {
    if (rc.dictionary_path.empty()) {
        throw ValidationError("a concept dictionary is required: pass --dict or paths.dictionary");
    }
    return ConceptDictionary::load(rc.dictionary_path);
}

Icd10Map load_icd_map(const RunConfig& rc) {
    if (rc.icd10_map_path.empty()) {
        throw ValidationError("an ICD-10 map is required: pass --icd-map or paths.icd10_map");
    }
    return Icd10Map::load(rc.icd10_map_path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write output file: " + path);
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- evaluate

SystemRun run_system(const std::string& model_path, const std::string& protocol_name,
                     const LoadedCohort& cohort, const ConceptDictionary& dict,
                     const RunConfig& rc) {
    if (!model_path.empty()) {
        BoostedStackModel model = BoostedStackModel::load(model_path);
        return run_model(model, cohort, rc.threads);
    }
    auto protocol = protocol_from_name(protocol_name);
    if (!protocol) {
        throw ValidationError("unknown protocol \"" + protocol_name +
                              "\" (sirs | standard | qsofa)");
    }
    return run_protocol(*protocol, cohort, dict, rc);
}

json evaluation_document(const SystemRun& run, const LoadedCohort& cohort, const RunConfig& rc,
                         const std::string& cohort_path) {
    EvalOptions opts;
    opts.seed = derive_seed(rc.seed, "eval.bootstrap");
    opts.threads = rc.threads;
    json doc = json::object();
    doc["format"] = "sepscreen-report";
    doc["version"] = 1;
    doc["cohort"] = cohort_path;
    doc["overall"] = report_to_json(
        evaluate_predictions(run.name, run.scores, run.preds, cohort.labels, run.threshold, opts));
    json subgroups = json::object();
    for (SepsisTier tier : {SepsisTier::severe_sepsis, SepsisTier::septic_shock}) {
        bool any = false;
        for (auto t : cohort.tiers) {
            if (t == tier) any = true;
        }
        if (!any) {
            subgroups[tier_name(tier)] = nullptr;
            continue;
        }
        subgroups[tier_name(tier)] = report_to_json(subgroup_evaluate(
            run.name, run.scores, run.preds, cohort.tiers, tier, run.threshold, opts));
    }
    doc["subgroups"] = std::move(subgroups);
    return doc;
}

void write_predictions(const std::string& path, const SystemRun& run, const LoadedCohort& cohort) {
    auto out = open_out(path);
    out << "# system: " << run.name << '\n';
    out << "id\tscore\tprediction\n";
    for (size_t i = 0; i < cohort.records.size(); ++i) {
        out << cohort.records[i].id << '\t' << fmt_double(run.scores[i]) << '\t'
            << int(run.preds[i]) << '\n';
    }
}

struct PredictionFile {
    std::string system;
    std::vector<std::string> ids;
    std::vector<double> scores;
    std::vector<uint8_t> preds;
};

PredictionFile read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file: " + path);
    PredictionFile pf;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.rfind("# system:", 0) == 0) {
            pf.system = line.substr(9);
            while (!pf.system.empty() && pf.system.front() == ' ') pf.system.erase(0, 1);
            continue;
        }
        if (line.rfind("id\t", 0) == 0) continue;
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError("predictions row needs 3 tab-separated columns", line_no);
        }
        pf.ids.push_back(line.substr(0, t1));
        try {
            pf.scores.push_back(std::stod(line.substr(t1 + 1, t2 - t1 - 1)));
            pf.preds.push_back(static_cast<uint8_t>(std::stoi(line.substr(t2 + 1)) != 0));
        } catch (const std::exception&) {
            throw ParseError("bad numeric value in predictions file", line_no);
        }
    }
    if (pf.system.empty()) pf.system = path;
    return pf;
}

// ------------------------------------------------------------------- main

int run(int argc, char** argv) {
    CLI::App app{"ED triage sepsis screening toolkit"};
    app.require_subcommand(1);

    CommonArgs common;

    auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic cohort");
    std::string synth_out, synth_latent;
    size_t synth_n = 0;
    add_common(synth_cmd, common);
    synth_cmd->add_option("--out", synth_out, "cohort output file")->required();
    synth_cmd->add_option("--latent", synth_latent,
                          "latent sidecar output (default <out>.latent.tsv)");
    synth_cmd->add_option("--n", synth_n, "record count override");

    auto* split_cmd = app.add_subcommand("split", "seeded train/test split");
    std::string split_cohort, split_train, split_test;
    double split_fraction = -1.0;
    add_common(split_cmd, common);
    split_cmd->add_option("--cohort", split_cohort)->required();
    split_cmd->add_option("--train", split_train)->required();
    split_cmd->add_option("--test", split_test)->required();
    split_cmd->add_option("--fraction", split_fraction, "train fraction (default from config)");

    auto* extract_cmd = app.add_subcommand("extract", "extract polarized concepts");
    std::string extract_cohort, extract_out;
    add_common(extract_cmd, common);
    extract_cmd->add_option("--cohort", extract_cohort)->required();
    extract_cmd->add_option("--out", extract_out)->required();

    auto* screen_cmd = app.add_subcommand("screen", "run rule-based protocols");
    std::string screen_cohort, screen_out, screen_protocol = "all";
    add_common(screen_cmd, common);
    screen_cmd->add_option("--cohort", screen_cohort)->required();
    screen_cmd->add_option("--out", screen_out)->required();
    screen_cmd->add_option("--protocol", screen_protocol, "sirs | standard | qsofa | all");

    auto* train_cmd = app.add_subcommand("train", "train the boosted stack model");
    std::string train_file, train_model_out, train_log, train_val_out;
    add_common(train_cmd, common);
    train_cmd->add_option("--train", train_file)->required();
    train_cmd->add_option("--model", train_model_out)->required();
    train_cmd->add_option("--log", train_log, "training log (default <model>.log)");
    train_cmd->add_option("--emit-validation", train_val_out,
                          "write the internal validation split as a cohort file");

    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a model or protocol");
    std::string eval_model, eval_protocol, eval_cohort, eval_out, eval_preds;
    add_common(eval_cmd, common);
    eval_cmd->add_option("--model", eval_model, "model file");
    eval_cmd->add_option("--protocol", eval_protocol, "sirs | standard | qsofa");
    eval_cmd->add_option("--cohort", eval_cohort)->required();
    eval_cmd->add_option("--out", eval_out)->required();
    eval_cmd->add_option("--predictions", eval_preds, "per-record predictions TSV");

    auto* compare_cmd = app.add_subcommand("compare", "side-by-side systems comparison");
    std::string compare_cohort, compare_out;
    std::vector<std::string> compare_preds;
    add_common(compare_cmd, common);
    compare_cmd->add_option("--cohort", compare_cohort)->required();
    compare_cmd->add_option("--pred", compare_preds, "predictions TSV (repeat, >= 2)")->required();
    compare_cmd->add_option("--out", compare_out)->required();

    auto* drift_cmd = app.add_subcommand("drift", "monthly covid fraction vs FPR series");
    std::string drift_model, drift_cohort, drift_out;
    add_common(drift_cmd, common);
    drift_cmd->add_option("--model", drift_model)->required();
    drift_cmd->add_option("--cohort", drift_cohort)->required();
    drift_cmd->add_option("--out", drift_out)->required();

    auto* heatmap_cmd = app.add_subcommand("heatmap", "vital-sign heatmap grids");
    std::string heatmap_cohort, heatmap_axes = "temperature,pulse", heatmap_dir;
    int heatmap_bins = 40;
    add_common(heatmap_cmd, common);
    heatmap_cmd->add_option("--cohort", heatmap_cohort)->required();
    heatmap_cmd->add_option("--axes", heatmap_axes, "x,y from temperature|pulse|resp_rate");
    heatmap_cmd->add_option("--bins", heatmap_bins);
    heatmap_cmd->add_option("--out-dir", heatmap_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump() << '\n';
        return 2;
    }

    RunConfig rc = resolve_config(common);

    if (synth_cmd->parsed()) {
        CohortConfig cc = rc.synth;
        if (synth_n > 0) cc.n_records = synth_n;
        cc.seed = derive_seed(rc.seed, "synth");
        GeneratedCohort cohort = generate(cc, rc.threads);
        write_cohort_file(synth_out, cohort.records);
        if (synth_latent.empty()) synth_latent = synth_out + ".latent.tsv";
        write_latent_file(synth_latent, cohort.latent);
        std::cout << "wrote " << cohort.records.size() << " records to " << synth_out << '\n';
        return 0;
    }

    if (split_cmd->parsed()) {
        auto records = read_cohort_file(split_cohort, rc.cleaning);
        if (records.empty()) throw DataError("cohort is empty: " + split_cohort);
        double fraction = split_fraction > 0 ? split_fraction : rc.train_fraction;
        if (!(fraction > 0.0 && fraction < 1.0)) {
            throw ValidationError("split fraction must be in (0, 1)");
        }
        Rng rng(derive_seed(rc.seed, "split"), 0);
        auto shuffled = rng.shuffled_indices(records.size());
        size_t n_train =
            static_cast<size_t>(std::llround(static_cast<double>(records.size()) * fraction));
        n_train = std::min(std::max<size_t>(n_train, 1), records.size() - 1);
        std::vector<char> in_train(records.size(), 0);
        for (size_t i = 0; i < n_train; ++i) in_train[shuffled[i]] = 1;
        std::vector<TriageRecord> train, test;
        for (size_t i = 0; i < records.size(); ++i) {
            (in_train[i] ? train : test).push_back(records[i]);
        }
        write_cohort_file(split_train, train);
        write_cohort_file(split_test, test);
        std::cout << "split " << records.size() << " -> " << train.size() << " train + "
                  << test.size() << " test\n";
        return 0;
    }

    if (extract_cmd->parsed()) {
        auto dict = load_dictionary(rc);
        auto cohort = load_cohort(extract_cohort, rc, dict, nullptr, false);
        auto out = open_out(extract_out);
        out << "id\tfield\tcanonical\tpolarity\tspan_begin\tspan_end\tduration\n";
        for (size_t i = 0; i < cohort.records.size(); ++i) {
            for (const auto& m : cohort.concepts[i].mentions) {
                out << cohort.records[i].id << '\t' << source_field_name(m.source_field) << '\t'
                    << m.canonical << '\t' << polarity_name(m.polarity) << '\t' << m.span_begin
                    << '\t' << m.span_end << '\t'
                    << (m.duration_bin ? duration_bin_name(*m.duration_bin) : "") << '\n';
            }
        }
        return 0;
    }

    if (screen_cmd->parsed()) {
        auto dict = load_dictionary(rc);
        auto cohort = load_cohort(screen_cohort, rc, dict, nullptr, false);
        std::vector<Protocol> protocols;
        if (screen_protocol == "all") {
            protocols = {Protocol::sirs, Protocol::standard, Protocol::qsofa};
        } else {
            auto p = protocol_from_name(screen_protocol);
            if (!p) throw ValidationError("unknown protocol \"" + screen_protocol + "\"");
            protocols = {*p};
        }
        auto out = open_out(screen_out);
        out << "id\tprotocol\tpositive\tcriteria_met\tmissing_inputs\n";
        for (size_t i = 0; i < cohort.records.size(); ++i) {
            for (Protocol p : protocols) {
                auto r = screen(p, cohort.records[i].vitals, cohort.concepts[i], dict, rc.protocol);
                out << cohort.records[i].id << '\t' << protocol_name(p) << '\t' << int(r.positive)
                    << '\t' << r.criteria_met << '\t';
                for (size_t k = 0; k < r.missing_inputs.size(); ++k) {
                    if (k) out << '|';
                    out << r.missing_inputs[k];
                }
                out << '\n';
            }
        }
        return 0;
    }

    if (train_cmd->parsed()) {
        auto dict = load_dictionary(rc);
        auto map = load_icd_map(rc);
        auto cohort = load_cohort(train_file, rc, dict, &map, true);
        TrainOutput result = run_training(cohort, dict, rc);
        result.model.save(train_model_out);
        if (!train_val_out.empty()) {
            std::vector<TriageRecord> val_records;
            for (size_t i : result.validation_rows) val_records.push_back(cohort.records[i]);
            write_cohort_file(train_val_out, val_records);
        }
        if (train_log.empty()) train_log = train_model_out + ".log";
        auto log = open_out(train_log);
        log << "# sepscreen training log\n";
        log << "records\t" << cohort.records.size() << '\n';
        log << "features\t" << result.model.vocabulary.size() << '\n';
        log << "vocabulary_hash\t" << result.model.vocabulary.version_hash() << '\n';
        log << "threshold\t" << fmt_double(result.model.threshold) << '\n';
        log << "stack_a\t" << fmt_double(result.model.stack_a) << '\n';
        log << "stack_b\t" << fmt_double(result.model.stack_b) << '\n';
        for (size_t r = 0; r < result.model.ensemble.training_loss.size(); ++r) {
            log << "round\t" << r << '\t' << fmt_double(result.model.ensemble.training_loss[r])
                << '\n';
        }
        log << "validation\tauc\t" << fmt_double(result.validation_report.auc.value) << '\n';
        log << "validation\ttpr\t" << fmt_double(result.validation_report.tpr.value) << '\n';
        log << "validation\tfpr\t" << fmt_double(result.validation_report.fpr.value) << '\n';
        std::cout << "model written to " << train_model_out << '\n';
        return 0;
    }

    if (eval_cmd->parsed()) {
        if (eval_model.empty() == eval_protocol.empty()) {
            throw ValidationError("evaluate needs exactly one of --model or --protocol");
        }
        auto dict = load_dictionary(rc);
        auto map = load_icd_map(rc);
        auto cohort = load_cohort(eval_cohort, rc, dict, &map, true);
        SystemRun run_result = run_system(eval_model, eval_protocol, cohort, dict, rc);
        json doc = evaluation_document(run_result, cohort, rc, eval_cohort);
        open_out(eval_out) << doc.dump(2) << '\n';
        if (!eval_preds.empty()) write_predictions(eval_preds, run_result, cohort);
        return 0;
    }

    if (compare_cmd->parsed()) {
        if (compare_preds.size() < 2) {
            throw ValidationError("compare needs at least two --pred files");
        }
        auto dict = load_dictionary(rc);
        auto map = load_icd_map(rc);
        auto cohort = load_cohort(compare_cohort, rc, dict, &map, true);
        std::vector<PredictionFile> systems;
        for (const auto& path : compare_preds) {
            PredictionFile pf = read_predictions(path);
            if (pf.ids.size() != cohort.records.size()) {
                throw DataError("predictions in " + path + " do not match the cohort record count");
            }
            for (size_t i = 0; i < pf.ids.size(); ++i) {
                if (pf.ids[i] != cohort.records[i].id) {
                    throw DataError("prediction ids in " + path + " mismatch the cohort at row " +
                                    std::to_string(i + 1));
                }
            }
            systems.push_back(std::move(pf));
        }
        EvalOptions opts;
        opts.seed = derive_seed(rc.seed, "eval.bootstrap");
        opts.threads = rc.threads;
        json doc = json::object();
        doc["format"] = "sepscreen-compare";
        doc["version"] = 1;
        doc["cohort"] = compare_cohort;
        json table = json::array();
        for (const auto& s : systems) {
            table.push_back(report_to_json(evaluate_predictions(s.system, s.scores, s.preds,
                                                                cohort.labels, std::nullopt, opts)));
        }
        doc["systems"] = std::move(table);
        json overlap = json::array();
        for (const auto& a : systems) {
            json row = json::array();
            for (const auto& b : systems) {
                row.push_back(tp_overlap(a.preds, b.preds, cohort.labels));
            }
            overlap.push_back(std::move(row));
        }
        doc["tp_overlap"] = std::move(overlap);
        open_out(compare_out) << doc.dump(2) << '\n';
        return 0;
    }

    if (drift_cmd->parsed()) {
        auto dict = load_dictionary(rc);
        auto map = load_icd_map(rc);
        auto cohort = load_cohort(drift_cohort, rc, dict, &map, true);
        SystemRun model_run = run_system(drift_model, "", cohort, dict, rc);
        auto std_preds = run_protocol(Protocol::standard, cohort, dict, rc).preds;
        std::vector<std::string> months(cohort.records.size());
        std::vector<uint8_t> covid(cohort.records.size(), 0);
        for (size_t i = 0; i < cohort.records.size(); ++i) {
            months[i] = cohort.records[i].arrival_time.month_key();
            covid[i] = cohort.records[i].covid_diagnosed.value_or(false) ? 1 : 0;
        }
        DriftSeries series = drift_series(months, covid, model_run.preds, std_preds, cohort.labels);
        open_out(drift_out) << drift_to_json(series).dump(2) << '\n';
        return 0;
    }

    if (heatmap_cmd->parsed()) {
        auto dict = load_dictionary(rc);
        auto map = load_icd_map(rc);
        auto cohort = load_cohort(heatmap_cohort, rc, dict, &map, true);
        size_t comma = heatmap_axes.find(',');
        if (comma == std::string::npos) {
            throw ValidationError("--axes expects two comma-separated axis names");
        }
        auto ax = heatmap_axis_from_name(heatmap_axes.substr(0, comma));
        auto ay = heatmap_axis_from_name(heatmap_axes.substr(comma + 1));
        if (!ax || !ay) {
            throw ValidationError("heatmap axes must be temperature | pulse | resp_rate");
        }
        HeatmapGrid grid =
            heatmap_grid(cohort.records, cohort.labels, *ax, *ay, heatmap_bins, rc.protocol);
        auto write_grid = [&](const std::string& path, const std::vector<std::vector<int64_t>>& g) {
            auto out = open_out(path);
            for (const auto& row : g) {
                for (size_t k = 0; k < row.size(); ++k) {
                    if (k) out << ',';
                    out << row[k];
                }
                out << '\n';
            }
        };
        write_grid(heatmap_dir + "/heatmap_nonsepsis.csv", grid.counts_nonsepsis);
        write_grid(heatmap_dir + "/heatmap_sepsis.csv", grid.counts_sepsis);
        json meta = json::object();
        meta["format"] = "sepscreen-heatmap";
        meta["version"] = 1;
        meta["x_axis"] = heatmap_axis_name(grid.x_axis);
        meta["y_axis"] = heatmap_axis_name(grid.y_axis);
        meta["rows"] = "x bins";
        meta["columns"] = "y bins";
        meta["x_edges"] = grid.x_edges;
        meta["y_edges"] = grid.y_edges;
        meta["x_thresholds"] = grid.x_thresholds;
        meta["y_thresholds"] = grid.y_thresholds;
        meta["n_nonsepsis"] = grid.n_nonsepsis;
        meta["n_sepsis"] = grid.n_sepsis;
        open_out(heatmap_dir + "/heatmap_meta.json") << meta.dump(2) << '\n';
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
}
