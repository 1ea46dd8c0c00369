// Copyright 2026 The LabelForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// labelforge: command-line front end. Exit status 0 on success, 1 on a
// domain error, 2 on a usage error.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "labelforge/annotation.hpp"
#include "labelforge/audit.hpp"
#include "labelforge/consistency.hpp"
#include "labelforge/duplicates.hpp"
#include "labelforge/error.hpp"
#include "labelforge/project.hpp"
#include "labelforge/report.hpp"
#include "labelforge/service.hpp"
#include "labelforge/text.hpp"
#include "labelforge/workflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace labelforge;

namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

// Relative project paths live under LABELFORGE_DATA_ROOT when it is set.
fs::path resolve_project(const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) {
    if (const char* root = std::getenv("LABELFORGE_DATA_ROOT"); root && *root) {
      return fs::path(root) / path;
    }
  }
  return path;
}

AttributeFormat parse_attribute_format(const std::string& s) {
  return s == "extended" ? AttributeFormat::Extended : AttributeFormat::CelebaOriginal;
}

LabelValue parse_label_arg(const std::string& s) {
  auto v = parse_label(s);
  if (!v) throw Error(ErrorCode::BadValue, "'" + s + "' is not a label");
  return *v;
}

Pass parse_pass_arg(const std::string& s) { return s == "b" || s == "B" ? Pass::B : Pass::A; }

Split parse_split_arg(const std::string& s) {
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  return Split::Train;
}

/// "image_id value" per line; blank lines and '#' comments skipped.
std::map<std::string, LabelValue> read_label_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read '" + path.string() + "'");
  std::map<std::string, LabelValue> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    auto v = tok.size() == 2 ? parse_label(tok[1]) : std::nullopt;
    if (!v) {
      throw Error(ErrorCode::Malformed,
                  path.string() + ":" + std::to_string(line_no) + ": expected 'image_id label'");
    }
    out[std::string(tok[0])] = *v;
  }
  return out;
}

/// "attribute n_differ n_n n_p n_total" per line.
std::vector<ConflictCounts> read_counts_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read '" + path.string() + "'");
  std::vector<ConflictCounts> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].starts_with('#')) continue;
    ConflictCounts c;
    c.attribute = tok[0];
    if (tok.size() != 5 || !parse_number(tok[1], c.n_differ) || !parse_number(tok[2], c.n_n) ||
        !parse_number(tok[3], c.n_p) || !parse_number(tok[4], c.n_total)) {
      throw Error(ErrorCode::Malformed, path.string() + ":" + std::to_string(line_no) +
                                            ": expected 'attribute n_differ n_n n_p n_total'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string latest_workflow(Project& project, const std::string& requested) {
  if (!requested.empty()) return requested;
  const auto& flows = project.workflows();
  if (flows.empty()) throw Error(ErrorCode::UnknownWorkflow, "project has no workflows");
  // Ids are w1, w2, ...; the newest has the largest number.
  std::string best;
  std::size_t best_n = 0;
  for (const auto& [id, _] : flows) {
    std::size_t n = 0;
    parse_number(std::string_view(id).substr(1), n);
    if (best.empty() || n > best_n) {
      best = id;
      best_n = n;
    }
  }
  return best;
}

struct Output {
  OutputFormat format = OutputFormat::Table;

  /// A single record: `table` for people, `record` for scripts.
  void emit(const std::string& table, const json& record) const {
    if (format == OutputFormat::Table) {
      std::cout << table;
      if (!table.empty() && table.back() != '\n') std::cout << '\n';
    } else {
      std::cout << record.dump() << '\n';
    }
  }
};

void print_workflow(const Output& out, const std::string& id, const WorkflowState& w) {
  std::ostringstream table;
  table << "workflow " << id << " attribute " << w.attribute << " status "
        << workflow_status_name(w.status) << " round " << w.round << "\n"
        << "cleaned " << w.cleaned.size() << " uncleaned " << w.uncleaned.size()
        << " estimated_error " << format_fixed(100.0 * estimated_error(w), 2) << "% target "
        << format_fixed(100.0 * w.config.target_error, 2) << "%\n";
  if (out.format == OutputFormat::Table) {
    write_round_summary(table, current_summary(w), OutputFormat::Table);
    std::cout << table.str();
    return;
  }
  std::cout << json{{"workflow_id", id},
                    {"attribute", w.attribute},
                    {"status", workflow_status_name(w.status)},
                    {"round", w.round},
                    {"cleaned", w.cleaned.size()},
                    {"uncleaned", w.uncleaned.size()},
                    {"estimated_error", estimated_error(w)},
                    {"target_error", w.config.target_error}}
                   .dump()
            << '\n';
  write_round_summary(std::cout, current_summary(w), OutputFormat::JsonLines);
}

void print_session(const Output& out, const std::string& id, const AuditSession& s) {
  const auto& plan = s.plan();
  std::ostringstream table;
  table << "session " << id << " attribute " << plan.attribute << " value "
        << label_name(plan.target_value) << " status " << session_status_name(s.status())
        << "\nsample " << plan.sample_ids.size() << " of " << plan.population
        << (plan.short_population ? " (short population: all taken)" : "") << "\n"
        << "pass a " << s.labels(Pass::A).size() << " labeled, pass b " << s.labels(Pass::B).size()
        << " labeled\n";
  out.emit(table.str(), {{"session_id", id},
                         {"attribute", plan.attribute},
                         {"value", label_name(plan.target_value)},
                         {"status", session_status_name(s.status())},
                         {"sample_size", plan.sample_ids.size()},
                         {"sample", plan.sample_ids},
                         {"population", plan.population},
                         {"short_population", plan.short_population},
                         {"pass_a_labeled", s.labels(Pass::A).size()},
                         {"pass_b_labeled", s.labels(Pass::B).size()}});
}

Service* g_service = nullptr;
extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labelforge: dataset annotation quality audits"};
  app.require_subcommand(1);
  std::string format_text = "table";
  app.add_option("--format", format_text, "Output format")
      ->check(CLI::IsMember({"table", "json-lines"}));

  std::string project, labels, labels_format = "celeba", embeddings, partition, identities;
  auto add_project = [&](CLI::App* sub) {
    return sub->add_option("-p,--project", project, "Project directory")->required();
  };
  auto label_format_option = [&](CLI::App* sub) {
    sub->add_option("--labels-format", labels_format, "Attribute file layout")
        ->check(CLI::IsMember({"celeba", "extended"}));
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Create a project from an attribute file");
  add_project(ingest);
  ingest->add_option("--labels", labels, "Attribute file")->required();
  label_format_option(ingest);
  ingest->add_option("--embeddings", embeddings, "Embedding file");
  ingest->add_option("--partition", partition, "Split file (filename 0|1|2)");
  ingest->add_option("--identities", identities, "Identity file (filename identity)");

  // consistency
  std::string pass_a_file, pass_b_file, session_id;
  auto* consistency = app.add_subcommand("consistency", "Inter-pass disagreement report");
  consistency->add_option("--pass-a", pass_a_file, "First pass attribute file");
  consistency->add_option("--pass-b", pass_b_file, "Second pass attribute file");
  consistency->add_option("-p,--project", project, "Project directory");
  consistency->add_option("--session", session_id, "Audit session whose passes to compare");
  label_format_option(consistency);

  // dupes
  double threshold = kDefaultDuplicateThreshold;
  bool replace = false;
  std::uint64_t pair_id = 0;
  std::string verdict_text, reviewer, status_filter = "all";
  auto* dupes = app.add_subcommand("dupes", "Near-duplicate review");
  dupes->require_subcommand(1);
  auto* dupes_find = dupes->add_subcommand("find", "Build the pair queue from embeddings");
  add_project(dupes_find);
  dupes_find->add_option("--threshold", threshold, "Cosine similarity threshold");
  dupes_find->add_flag("--replace", replace, "Rebuild an existing queue");
  auto* dupes_list = dupes->add_subcommand("list", "Show the pair queue");
  add_project(dupes_list);
  dupes_list->add_option("--status", status_filter)
      ->check(CLI::IsMember({"all", "pending", "arbitration"}));
  auto* dupes_verdict = dupes->add_subcommand("verdict", "Record a reviewer verdict");
  add_project(dupes_verdict);
  dupes_verdict->add_option("--pair", pair_id)->required();
  dupes_verdict->add_option("--verdict", verdict_text)
      ->required()
      ->check(CLI::IsMember({"DUPLICATE", "NEAR_DUPLICATE_REJECTED"}));
  dupes_verdict->add_option("--reviewer", reviewer)->required();
  auto* dupes_arbitrate = dupes->add_subcommand("arbitrate", "Rule on a pair in arbitration");
  add_project(dupes_arbitrate);
  dupes_arbitrate->add_option("--pair", pair_id)->required();
  dupes_arbitrate->add_option("--verdict", verdict_text)
      ->required()
      ->check(CLI::IsMember({"DUPLICATE", "NEAR_DUPLICATE_REJECTED"}));
  dupes_arbitrate->add_option("--arbiter", reviewer)->required();

  // pin
  std::string pairs_file, counts_file;
  std::vector<std::string> exclude;
  auto* pin = app.add_subcommand("pin", "Duplicate-pair inconsistency per attribute");
  pin->add_option("-p,--project", project, "Project directory");
  pin->add_option("--pairs", pairs_file, "Pair queue TSV");
  pin->add_option("--labels", labels, "Attribute file");
  pin->add_option("--counts", counts_file, "Precomputed counts: attribute n_differ n_n n_p n_total");
  pin->add_option("--exclude", exclude, "Attributes to leave out")->delimiter(',');
  label_format_option(pin);

  // audit
  std::string attribute, value_text, pass_text = "a", image_id, annotator, from_file;
  std::size_t min_per_value = 500;
  std::uint64_t seed = 0;
  auto* audit = app.add_subcommand("audit", "Two-pass audit sessions");
  audit->require_subcommand(1);
  auto* audit_plan = audit->add_subcommand("plan", "Sample a stratum and open a session");
  add_project(audit_plan);
  audit_plan->add_option("--attribute", attribute)->required();
  audit_plan->add_option("--value", value_text)->required();
  audit_plan->add_option("--min-per-value", min_per_value);
  audit_plan->add_option("--seed", seed);
  auto* audit_label = audit->add_subcommand("label", "Record pass labels");
  add_project(audit_label);
  audit_label->add_option("--session", session_id)->required();
  audit_label->add_option("--pass", pass_text)->required()->check(CLI::IsMember({"a", "b"}));
  audit_label->add_option("--image", image_id);
  audit_label->add_option("--value", value_text);
  audit_label->add_option("--from", from_file, "File of 'image_id label' lines");
  auto* audit_resolve = audit->add_subcommand("resolve", "Consensus for a disagreement");
  add_project(audit_resolve);
  audit_resolve->add_option("--session", session_id)->required();
  audit_resolve->add_option("--image", image_id)->required();
  audit_resolve->add_option("--value", value_text)->required();
  auto* audit_close = audit->add_subcommand("close", "Close a reconciled session");
  add_project(audit_close);
  audit_close->add_option("--session", session_id)->required();
  auto* audit_show = audit->add_subcommand("show", "Session status");
  add_project(audit_show);
  audit_show->add_option("--session", session_id)->required();
  auto* audit_report = audit->add_subcommand("report", "Error rates of closed sessions");
  add_project(audit_report);

  // workflow
  std::string workflow_id, seed_split = "train", config_file;
  std::size_t votes = 0;
  auto* workflow = app.add_subcommand("workflow", "Iterative cleaning workflow");
  workflow->require_subcommand(1);
  auto* wf_init = workflow->add_subcommand("init", "Start a workflow for one attribute");
  add_project(wf_init);
  wf_init->add_option("--attribute", attribute)->required();
  wf_init->add_option("--seed-split", seed_split)->check(CLI::IsMember({"train", "val", "test"}));
  wf_init->add_option("--config", config_file, "JSON file with workflow settings");
  auto wf_common = [&](CLI::App* sub) {
    add_project(sub);
    sub->add_option("--workflow", workflow_id, "Workflow id (default: newest)");
  };
  auto* wf_step = workflow->add_subcommand("step", "Run one round");
  wf_common(wf_step);
  auto* wf_status = workflow->add_subcommand("status", "Show bins and progress");
  wf_common(wf_status);
  auto* wf_sample = workflow->add_subcommand("sample", "Audit sample of a bin");
  wf_common(wf_sample);
  wf_sample->add_option("--votes", votes)->required();
  auto* wf_audit = workflow->add_subcommand("audit", "Record a bin audit");
  wf_common(wf_audit);
  wf_audit->add_option("--votes", votes)->required();
  wf_audit->add_option("--answers", from_file, "File of 'image_id label' lines");
  wf_audit->add_option("--session", session_id, "Closed audit session holding the answers");
  auto* wf_manual = workflow->add_subcommand("manual", "Label a small bin by hand");
  wf_common(wf_manual);
  wf_manual->add_option("--votes", votes)->required();
  wf_manual->add_option("--labels", from_file, "File of 'image_id label' lines")->required();
  auto* wf_defer = workflow->add_subcommand("defer", "Send a bin to the next round");
  wf_common(wf_defer);
  wf_defer->add_option("--votes", votes)->required();
  auto* wf_apply = workflow->add_subcommand("apply", "Write cleaned labels to the project");
  wf_common(wf_apply);

  // export
  std::string out_file;
  auto* exporter = app.add_subcommand("export", "Write the current labels");
  add_project(exporter);
  exporter->add_option("-o,--out", out_file)->required();

  // serve
  std::string host = "127.0.0.1", data_root, image_root;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--data-root", data_root, "Default: $LABELFORGE_DATA_ROOT");
  serve->add_option("--images", image_root, "Directory served under /images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  Output out{*parse_output_format(format_text)};
  auto usage = [&](const std::string& message) {
    std::cerr << "usage error: " << message << "\n";
    return kUsageError;
  };

  try {
    if (ingest->parsed()) {
      ProjectSources src;
      src.labels = labels;
      src.format = parse_attribute_format(labels_format);
      if (!embeddings.empty()) src.embeddings = embeddings;
      if (!partition.empty()) src.partition = partition;
      if (!identities.empty()) src.identities = identities;
      const Project p = Project::create(resolve_project(project), src);
      out.emit("created project " + p.id() + " at " + p.dir().string() + ": " +
                   std::to_string(p.matrix().image_count()) + " images, " +
                   std::to_string(p.matrix().attribute_count()) + " attributes, " +
                   std::to_string(p.matrix().unusable_count()) + " unusable",
               {{"project_id", p.id()},
                {"dir", p.dir().string()},
                {"images", p.matrix().image_count()},
                {"attributes", p.matrix().attribute_count()},
                {"unusable", p.matrix().unusable_count()}});

    } else if (consistency->parsed()) {
      std::vector<DisagreementReport> rows;
      if (!pass_a_file.empty() || !pass_b_file.empty()) {
        if (pass_a_file.empty() || pass_b_file.empty()) {
          return usage("--pass-a and --pass-b go together");
        }
        const auto fmt = parse_attribute_format(labels_format);
        rows = disagreement_counts(ingest_attribute_file(pass_a_file, fmt),
                                   ingest_attribute_file(pass_b_file, fmt));
      } else if (!project.empty() && !session_id.empty()) {
        Project p = Project::open(resolve_project(project));
        const AuditSession& s = p.session(session_id);
        rows = disagreement_counts(pass_matrix(s, Pass::A), pass_matrix(s, Pass::B));
      } else {
        return usage("consistency needs --pass-a/--pass-b or --project/--session");
      }
      write_disagreement_report(std::cout, rows, out.format);

    } else if (dupes->parsed()) {
      Project p = Project::open(resolve_project(project));
      if (dupes_find->parsed()) {
        if (!p.embeddings()) throw Error(ErrorCode::Validation, "project has no embeddings");
        if (!p.pairs().records().empty() && !replace) {
          throw Error(ErrorCode::Validation, "pair queue exists; use --replace to rebuild it");
        }
        p.pairs() = PairQueue(find_candidate_pairs(*p.embeddings(), threshold));
        p.save_pairs();
        write_pairs(std::cout, p.pairs().records(), out.format);
      } else if (dupes_list->parsed()) {
        std::vector<PairRecord> rows;
        if (status_filter == "all") {
          rows = p.pairs().records();
        } else {
          const auto refs = status_filter == "pending" ? p.pairs().pending()
                                                       : p.pairs().arbitration_queue();
          for (const auto* r : refs) rows.push_back(*r);
        }
        write_pairs(std::cout, rows, out.format);
      } else if (dupes_verdict->parsed()) {
        VerdictOutcome outcome;
        try {
          outcome = p.pairs().record_verdict(pair_id, *parse_verdict(verdict_text), reviewer);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::VerdictConflict) p.save_pairs();
          throw;
        }
        p.save_pairs();
        const char* word = outcome == VerdictOutcome::Recorded ? "RECORDED" : "UNCHANGED";
        out.emit("pair " + std::to_string(pair_id) + ": " + word,
                 {{"pair_id", pair_id}, {"outcome", word}});
      } else {
        p.pairs().resolve_arbitration(pair_id, *parse_verdict(verdict_text), reviewer);
        p.save_pairs();
        out.emit("pair " + std::to_string(pair_id) + ": " + verdict_text,
                 {{"pair_id", pair_id}, {"verdict", verdict_text}});
      }

    } else if (pin->parsed()) {
      std::vector<ConflictCounts> counts;
      if (!counts_file.empty()) {
        counts = read_counts_file(counts_file);
      } else if (!pairs_file.empty() && !labels.empty()) {
        const PairQueue q = PairQueue::load(pairs_file);
        counts = attribute_conflicts(q.records(),
                                     ingest_attribute_file(labels, parse_attribute_format(labels_format)));
      } else if (!project.empty()) {
        const Project p = Project::open(resolve_project(project));
        counts = attribute_conflicts(p.pairs().records(), p.matrix());
      } else {
        return usage("pin needs --counts, --pairs with --labels, or --project");
      }
      write_pin_report(std::cout, pin_report(counts, exclude), out.format);

    } else if (audit->parsed()) {
      Project p = Project::open(resolve_project(project));
      if (audit_plan->parsed()) {
        const std::string id = p.add_session(AuditSession(sampling_plan(
            p.original(), attribute, parse_label_arg(value_text), min_per_value, seed)));
        print_session(out, id, p.session(id));
      } else if (audit_label->parsed()) {
        AuditSession& s = p.session(session_id);
        const Pass pass = parse_pass_arg(pass_text);
        std::map<std::string, LabelValue> batch;
        if (!from_file.empty()) {
          batch = read_label_file(from_file);
        } else if (!image_id.empty() && !value_text.empty()) {
          batch[image_id] = parse_label_arg(value_text);
        } else {
          return usage("audit label needs --image with --value, or --from");
        }
        for (const auto& [id, v] : batch) s.record(pass, id, v);
        p.save_session(session_id);
        print_session(out, session_id, s);
      } else if (audit_resolve->parsed()) {
        AuditSession& s = p.session(session_id);
        s.resolve(image_id, parse_label_arg(value_text));
        p.save_session(session_id);
        print_session(out, session_id, s);
      } else if (audit_close->parsed()) {
        AuditSession& s = p.session(session_id);
        s.close();
        p.save_session(session_id);
        print_session(out, session_id, s);
      } else if (audit_show->parsed()) {
        print_session(out, session_id, p.session(session_id));
      } else {
        std::vector<AuditSession> closed;
        for (const auto& [_, s] : p.sessions()) {
          if (s.status() == SessionStatus::Closed) closed.push_back(s);
        }
        write_error_rate_report(std::cout, error_rates(closed, p.original()), out.format);
      }

    } else if (workflow->parsed()) {
      Project p = Project::open(resolve_project(project));
      if (wf_init->parsed()) {
        WorkflowConfig config;
        if (!config_file.empty()) {
          std::ifstream in(config_file);
          if (!in) throw Error(ErrorCode::IoFailure, "cannot read '" + config_file + "'");
          std::stringstream text;
          text << in.rdbuf();
          config = workflow_config_from_json(text.str());
        }
        const std::string id =
            p.create_workflow_from_split(attribute, parse_split_arg(seed_split), config);
        print_workflow(out, id, p.workflow(id));
        return 0;
      }
      const std::string id = latest_workflow(p, workflow_id);
      WorkflowState& w = p.workflow(id);
      if (wf_step->parsed()) {
        if (w.status != WorkflowStatus::Running) {
          out.emit("workflow " + id + " is " + std::string(workflow_status_name(w.status)) +
                       "; nothing to do",
                   {{"workflow_id", id}, {"status", workflow_status_name(w.status)}, {"noop", true}});
          return 0;
        }
        if (!p.embeddings()) throw Error(ErrorCode::Validation, "project has no embeddings");
        run_round(w, *p.embeddings());
        p.save_workflow(id);
        print_workflow(out, id, w);
      } else if (wf_status->parsed()) {
        print_workflow(out, id, w);
      } else if (wf_sample->parsed()) {
        const auto ids = audit_sample(w, votes);
        std::string table;
        for (const auto& s : ids) table += s + "\n";
        out.emit(table, {{"workflow_id", id}, {"votes", votes}, {"sample", ids}});
      } else if (wf_audit->parsed()) {
        if (!session_id.empty()) {
          audit_bin(w, votes, p.session(session_id));
        } else if (!from_file.empty()) {
          audit_bin(w, votes, read_label_file(from_file));
        } else {
          return usage("workflow audit needs --answers or --session");
        }
        p.save_workflow(id);
        print_workflow(out, id, w);
      } else if (wf_manual->parsed()) {
        mark_manual(w, votes, read_label_file(from_file));
        p.save_workflow(id);
        print_workflow(out, id, w);
      } else if (wf_defer->parsed()) {
        defer_bin(w, votes);
        p.save_workflow(id);
        print_workflow(out, id, w);
      } else {
        const std::size_t n = p.apply_workflow(id, "workflow:" + id);
        out.emit("applied " + std::to_string(n) + " labels from " + id,
                 {{"workflow_id", id}, {"applied", n}});
      }

    } else if (exporter->parsed()) {
      const Project p = Project::open(resolve_project(project));
      const ExportSummary s = p.export_to(out_file);
      out.emit("wrote " + std::to_string(s.rows) + " rows to " + out_file +
                   (s.sidecar ? ", " + std::to_string(s.unusable_images) +
                                    " unusable ids to " + s.sidecar->string()
                              : std::string()),
               {{"path", out_file},
                {"rows", s.rows},
                {"info_not_visible_cells", s.info_not_visible_cells},
                {"unusable_images", s.unusable_images}});

    } else if (serve->parsed()) {
      if (data_root.empty()) {
        const char* env = std::getenv("LABELFORGE_DATA_ROOT");
        if (!env || !*env) return usage("serve needs --data-root or LABELFORGE_DATA_ROOT");
        data_root = env;
      }
      ServiceOptions options;
      options.data_root = data_root;
      if (!image_root.empty()) options.image_root = image_root;
      Service service(options);
      if (!service.bind(host, port)) {
        throw Error(ErrorCode::IoFailure, "cannot bind " + host + ":" + std::to_string(port));
      }
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << port << "/api/v1\n";
      service.run();
      g_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& item : e.items()) std::cerr << "  " << item << "\n";
    return kDomainError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return 0;
}
