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


#include "labelforge/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <sstream>

#include "labelforge/consistency.hpp"
#include "labelforge/error.hpp"
#include "labelforge/report.hpp"
#include "labelforge/text.hpp"

namespace labelforge {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// LeaseBook
// ---------------------------------------------------------------------------

std::optional<LeaseBook::Lease> LeaseBook::next(const std::string& session_id,
                                                const AuditSession& session, Pass pass,
                                                const std::string& annotator) {
  bind(session_id, pass, annotator);
  const auto now = now_();
  std::optional<Lease> held;
  for (const auto& id : session.unlabeled(pass)) {
    const Key key{session_id, pass, id};
    auto it = leases_.find(key);
    if (it != leases_.end() && it->second.expires <= now) {
      leases_.erase(it);
      it = leases_.end();
    }
    if (it != leases_.end()) {
      if (it->second.annotator == annotator) return it->second;
      continue;
    }
    if (!held) held = Lease{id, annotator, now + timeout_};
  }
  if (held) leases_[{session_id, pass, held->image_id}] = *held;
  return held;
}

void LeaseBook::bind(const std::string& session_id, Pass pass, const std::string& annotator) {
  if (annotator.empty()) throw Error(ErrorCode::Validation, "annotator is required");
  auto [it, inserted] = bindings_.try_emplace({session_id, annotator}, pass);
  if (!inserted && it->second != pass) {
    throw Error(ErrorCode::AnnotatorBound, "annotator '" + annotator + "' works pass " +
                                               std::string(pass_name(it->second)) +
                                               " of session " + session_id);
  }
}

void LeaseBook::check_submit(const std::string& session_id, Pass pass, const std::string& image_id,
                             const std::string& annotator) {
  bind(session_id, pass, annotator);
  auto it = leases_.find({session_id, pass, image_id});
  if (it == leases_.end() || it->second.annotator != annotator || it->second.expires <= now_()) {
    throw Error(ErrorCode::LeaseNotHeld,
                "'" + annotator + "' holds no live lease on " + image_id, {image_id});
  }
}

void LeaseBook::release(const std::string& session_id, Pass pass, const std::string& image_id) {
  leases_.erase({session_id, pass, image_id});
}

// ---------------------------------------------------------------------------
// Error mapping
// ---------------------------------------------------------------------------

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownImage:
    case ErrorCode::UnknownAttribute:
    case ErrorCode::UnknownPair:
    case ErrorCode::UnknownBin:
    case ErrorCode::UnknownProject:
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownWorkflow:
      return 404;
    case ErrorCode::ImageUnusable:
    case ErrorCode::VerdictConflict:
    case ErrorCode::UnresolvedDisagreements:
    case ErrorCode::SessionNotClosed:
    case ErrorCode::SessionClosed:
    case ErrorCode::IncompletePasses:
    case ErrorCode::PoolOverlap:
    case ErrorCode::NotRunning:
    case ErrorCode::BinAlreadyDecided:
    case ErrorCode::BinNotEligible:
    case ErrorCode::ProjectExists:
    case ErrorCode::AnnotatorBound:
    case ErrorCode::LeaseNotHeld:
      return 409;
    case ErrorCode::IoFailure:
      return 500;
    default:
      return 422;
  }
}

namespace {

json error_body(ErrorCode code, const std::string& message,
                const std::vector<std::string>& items = {}) {
  return {{"code", error_code_name(code)}, {"message", message}, {"items", items}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, error_body(e.code(), e.what(), e.items()), http_status_for(e.code()));
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Turns every exception into a JSON error body.
Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const json::exception& e) {
      send_json(res, error_body(ErrorCode::Validation, e.what()), 422);
    } catch (const std::exception& e) {
      send_json(res, error_body(ErrorCode::IoFailure, e.what()), 500);
    }
  };
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json j = json::parse(req.body);
  if (!j.is_object()) throw Error(ErrorCode::Validation, "request body must be a JSON object");
  return j;
}

std::string required_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::Validation, std::string("missing string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

LabelValue label_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::Validation, std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  std::optional<LabelValue> label;
  if (v.is_string()) label = parse_label(v.get<std::string>());
  if (v.is_number_integer()) label = label_from_int(v.get<int>());
  if (!label) throw Error(ErrorCode::BadValue, std::string("field '") + key + "' is not a label");
  return *label;
}

Pass parse_pass(std::string_view text) {
  if (text == "a" || text == "A") return Pass::A;
  if (text == "b" || text == "B") return Pass::B;
  throw Error(ErrorCode::Validation, "pass must be 'a' or 'b'");
}

std::uint64_t parse_id(const std::string& text, ErrorCode unknown) {
  std::uint64_t v = 0;
  if (!parse_number(text, v)) throw Error(unknown, "no such id: " + text);
  return v;
}

bool valid_project_id(std::string_view id) {
  if (id.empty() || id.front() == '.' || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

std::string param(const httplib::Request& req, const char* name) {
  return req.path_params.at(name);
}

std::map<std::string, LabelValue> label_map(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Validation, "expected an object of id -> label");
  std::map<std::string, LabelValue> out;
  for (const auto& [id, value] : j.items()) {
    json wrapper = {{"v", value}};
    out.emplace(id, label_field(wrapper, "v"));
  }
  return out;
}

json pair_json(const PairRecord& r) {
  json j = {{"pair_id", r.pair_id},
            {"image_a", r.pair.image_a},
            {"image_b", r.pair.image_b},
            {"similarity", r.pair.similarity},
            {"identity", r.pair.identity},
            {"verdict", verdict_name(r.verdict)},
            {"reviewer", r.reviewer},
            {"timestamp", r.timestamp},
            {"in_arbitration", r.in_arbitration}};
  if (r.in_arbitration) {
    j["conflicting_reviewer"] = r.conflicting_reviewer;
    j["conflicting_verdict"] = verdict_name(r.conflicting_verdict);
  }
  return j;
}

json labels_json(const std::map<std::string, LabelValue, std::less<>>& labels) {
  json j = json::object();
  for (const auto& [id, v] : labels) j[id] = label_name(v);
  return j;
}

// Pass labels stay hidden from everyone while the session is OPEN unless the
// caller asks for its own pass.
json session_json(const std::string& id, const AuditSession& s, std::optional<Pass> pass) {
  const auto& plan = s.plan();
  json j = {{"session_id", id},
            {"attribute", plan.attribute},
            {"value", label_name(plan.target_value)},
            {"status", session_status_name(s.status())},
            {"sample", plan.sample_ids},
            {"population", plan.population},
            {"short_population", plan.short_population},
            {"seed", plan.rng_seed},
            {"generator", plan.generator}};
  json progress = json::object();
  for (Pass p : {Pass::A, Pass::B}) {
    progress[std::string(pass_name(p))] = {{"labeled", s.labels(p).size()},
                                           {"complete", s.pass_complete(p)}};
  }
  j["progress"] = progress;
  if (s.status() == SessionStatus::Open) {
    if (pass) j["labels"] = {{std::string(pass_name(*pass)), labels_json(s.labels(*pass))}};
    return j;
  }
  j["labels"] = {{"a", labels_json(s.labels(Pass::A))}, {"b", labels_json(s.labels(Pass::B))}};
  j["disagreements"] = s.disagreements();
  j["resolutions"] = labels_json(s.resolutions());
  if (s.status() == SessionStatus::Closed) j["consensus"] = labels_json(s.consensus());
  return j;
}

json workflow_json(const std::string& id, const WorkflowState& w) {
  json bins = json::array();
  for (const auto& b : w.bins) {
    json jb = {{"votes", b.votes},
               {"size", b.members.size()},
               {"majority_label", label_name(majority_label(b.votes, w.config.k))},
               {"eligible", audit_eligible(b.votes, w.config)},
               {"decision", bin_decision_name(b.decision)}};
    if (b.audit) {
      jb["audit"] = {{"sample_size", b.audit->sample_ids.size()},
                     {"mismatches", b.audit->mismatches},
                     {"error", b.audit->error},
                     {"ci", {b.audit->ci.lo, b.audit->ci.hi}}};
    }
    bins.push_back(std::move(jb));
  }
  json history = json::array();
  for (const auto& h : w.history) {
    json hb = json::array();
    for (const auto& b : h.bins) {
      hb.push_back({{"votes", b.votes},
                    {"size", b.size},
                    {"decision", bin_decision_name(b.decision)},
                    {"audited_error", b.audited_error ? json(*b.audited_error) : json(nullptr)}});
    }
    history.push_back(
        {{"round", h.round}, {"cleaned", h.cleaned}, {"uncleaned", h.uncleaned}, {"bins", hb}});
  }
  return {{"workflow_id", id},
          {"attribute", w.attribute},
          {"status", workflow_status_name(w.status)},
          {"round", w.round},
          {"cleaned", w.cleaned.size()},
          {"uncleaned", w.uncleaned.size()},
          {"estimated_error", estimated_error(w)},
          {"target_error", w.config.target_error},
          {"config", json::parse(workflow_config_to_json(w.config))},
          {"bins", bins},
          {"history", history}};
}

// Reports are rendered by the shared writers. JSON (the default) collects the
// json-lines output into an array.
template <typename Write>
void send_report(httplib::Response& res, const httplib::Request& req, Write write) {
  const std::string fmt = req.has_param("format") ? req.get_param_value("format") : "json";
  std::ostringstream out;
  if (fmt == "table") {
    write(out, OutputFormat::Table);
    res.set_content(out.str(), "text/plain");
    return;
  }
  if (fmt != "json" && fmt != "json-lines") {
    throw Error(ErrorCode::Validation, "format must be json, json-lines or table");
  }
  write(out, OutputFormat::JsonLines);
  if (fmt == "json-lines") {
    res.set_content(out.str(), "application/x-ndjson");
    return;
  }
  json rows = json::array();
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  send_json(res, rows);
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  throw Error(ErrorCode::Validation, "split must be train, val or test");
}

std::size_t parse_votes(const std::string& text) {
  std::size_t v = 0;
  if (!parse_number(text, v)) throw Error(ErrorCode::UnknownBin, "no bin '" + text + "'");
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Service
// ---------------------------------------------------------------------------

Service::Service(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  std::error_code ec;
  fs::create_directories(options_.data_root, ec);
  install_routes();
}

Service::~Service() { stop(); }

int Service::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }
bool Service::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }
void Service::run() { server_->listen_after_bind(); }
void Service::stop() {
  if (server_->is_running()) server_->stop();
}

Service::ProjectSlot& Service::slot(const std::string& project_id) {
  std::lock_guard lock(projects_mutex_);
  if (auto it = projects_.find(project_id); it != projects_.end()) return *it->second;
  const fs::path dir = options_.data_root / project_id;
  if (!valid_project_id(project_id) || !fs::exists(dir / "project.json")) {
    throw Error(ErrorCode::UnknownProject, "no project '" + project_id + "'");
  }
  auto s = std::make_unique<ProjectSlot>(Project::open(dir),
                                         LeaseBook(options_.lease_timeout, options_.clock));
  return *projects_.emplace(project_id, std::move(s)).first->second;
}

void Service::install_routes() {
  auto& srv = *server_;
  const std::string api = "/api/v1";
  const std::string proj = api + "/projects/:pid";

  if (options_.image_root) srv.set_mount_point("/images", options_.image_root->string());

  // Runs `fn` on a project under its lock.
  auto locked = [this](const httplib::Request& req, auto&& fn) {
    ProjectSlot& s = slot(param(req, "pid"));
    std::lock_guard lock(s.mutex);
    return fn(s);
  };

  // Records one pass label through the lease book.
  auto submit_label = [](ProjectSlot& s, const std::string& sid, Pass pass,
                         const std::string& image_id, LabelValue value,
                         const std::string& annotator) {
    AuditSession& session = s.project.session(sid);
    s.leases.check_submit(sid, pass, image_id, annotator);
    session.record(pass, image_id, value);
    s.leases.release(sid, pass, image_id);
    s.project.save_session(sid);
  };

  // --- projects -------------------------------------------------------------

  srv.Get(api + "/projects", guarded([this](const httplib::Request&, httplib::Response& res) {
            json ids = json::array();
            std::vector<std::string> names;
            for (const auto& e : fs::directory_iterator(options_.data_root)) {
              if (fs::exists(e.path() / "project.json")) names.push_back(e.path().filename());
            }
            std::sort(names.begin(), names.end());
            for (auto& n : names) ids.push_back(n);
            send_json(res, {{"projects", ids}});
          }));

  srv.Post(api + "/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const std::string id = required_string(b, "project_id");
             if (!valid_project_id(id)) throw Error(ErrorCode::Validation, "bad project id");
             ProjectSources src;
             auto resolve = [&](const std::string& p) {
               fs::path path(p);
               return path.is_absolute() ? path : options_.data_root / path;
             };
             src.labels = resolve(required_string(b, "labels"));
             const std::string fmt = b.value("format", std::string("celeba"));
             if (fmt == "celeba") {
               src.format = AttributeFormat::CelebaOriginal;
             } else if (fmt == "extended") {
               src.format = AttributeFormat::Extended;
             } else {
               throw Error(ErrorCode::Validation, "format must be celeba or extended");
             }
             if (b.contains("embeddings")) src.embeddings = resolve(b.at("embeddings"));
             if (b.contains("partition")) src.partition = resolve(b.at("partition"));
             if (b.contains("identities")) src.identities = resolve(b.at("identities"));
             std::lock_guard lock(projects_mutex_);
             const fs::path dir = options_.data_root / id;
             if (fs::exists(dir / "project.json")) {
               throw Error(ErrorCode::ProjectExists, "project '" + id + "' exists");
             }
             Project p = Project::create(dir, src);
             const json out = {{"project_id", id},
                               {"images", p.matrix().image_count()},
                               {"attributes", p.matrix().attributes()}};
             projects_.emplace(id, std::make_unique<ProjectSlot>(
                                       std::move(p),
                                       LeaseBook(options_.lease_timeout, options_.clock)));
             send_json(res, out, 201);
           }));

  srv.Get(proj, guarded([locked](const httplib::Request& req, httplib::Response& res) {
            locked(req, [&](ProjectSlot& s) {
              const Project& p = s.project;
              json sessions = json::array();
              for (const auto& [id, _] : p.sessions()) sessions.push_back(id);
              json workflows = json::array();
              for (const auto& [id, _] : s.project.workflows()) workflows.push_back(id);
              send_json(res, {{"project_id", p.id()},
                              {"images", p.matrix().image_count()},
                              {"unusable", p.matrix().unusable_count()},
                              {"attributes", p.matrix().attributes()},
                              {"edits", p.log().size()},
                              {"has_embeddings", p.embeddings() != nullptr},
                              {"pairs", p.pairs().records().size()},
                              {"guidelines", p.guidelines()},
                              {"sessions", sessions},
                              {"workflows", workflows}});
            });
          }));

  srv.Post(proj + "/guidelines",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             locked(req, [&](ProjectSlot& s) {
               s.project.set_guideline(required_string(b, "attribute"),
                                       required_string(b, "text"));
               send_json(res, {{"guidelines", s.project.guidelines()}});
             });
           }));

  // --- annotation queue -----------------------------------------------------

  srv.Get(proj + "/annotations/next",
          guarded([this, locked](const httplib::Request& req, httplib::Response& res) {
            const std::string queue = req.get_param_value("queue");
            const std::string annotator = req.get_param_value("annotator");
            const auto colon = queue.rfind(':');
            if (colon == std::string::npos) {
              throw Error(ErrorCode::Validation, "queue must be <session>:<a|b>");
            }
            const std::string sid = queue.substr(0, colon);
            const Pass pass = parse_pass(queue.substr(colon + 1));
            locked(req, [&](ProjectSlot& s) {
              const AuditSession& session = s.project.session(sid);
              if (session.status() != SessionStatus::Open) {
                res.status = 204;
                return;
              }
              auto lease = s.leases.next(sid, session, pass, annotator);
              if (!lease) {
                res.status = 204;
                return;
              }
              const std::string& attr = session.plan().attribute;
              auto g = s.project.guidelines().find(attr);
              const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                  lease->expires - options_.clock());
              send_json(res, {{"queue", queue},
                              {"image_id", lease->image_id},
                              {"image_url", "/images/" + lease->image_id},
                              {"attribute", attr},
                              {"guideline", g == s.project.guidelines().end() ? "" : g->second},
                              {"choices", {"TRUE", "FALSE", "INFO_NOT_VISIBLE"}},
                              {"lease_expires_in_ms", std::max<long long>(0, left.count())}});
            });
          }));

  // With "queue": one pass label under a lease. Without: a direct label edit
  // or a usability change on the project matrix.
  srv.Post(proj + "/annotations",
           guarded([locked, submit_label](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const std::string image = required_string(b, "image_id");
             locked(req, [&](ProjectSlot& s) {
               if (b.contains("queue")) {
                 const std::string queue = required_string(b, "queue");
                 const auto colon = queue.rfind(':');
                 if (colon == std::string::npos) {
                   throw Error(ErrorCode::Validation, "queue must be <session>:<a|b>");
                 }
                 const std::string sid = queue.substr(0, colon);
                 const Pass pass = parse_pass(queue.substr(colon + 1));
                 submit_label(s, sid, pass, image, label_field(b, "value"),
                              required_string(b, "annotator"));
                 send_json(res, {{"queue", queue}, {"image_id", image}, {"recorded", true}});
                 return;
               }
               const std::string source = b.value("source", std::string("api"));
               if (b.contains("unusable")) {
                 const auto& e = s.project.mark_unusable(image, b.at("unusable").get<bool>(), source);
                 send_json(res, {{"image_id", e.image_id},
                                 {"unusable", e.new_unusable},
                                 {"timestamp", e.timestamp}});
                 return;
               }
               const auto& e = s.project.apply_label(image, required_string(b, "attribute"),
                                                     label_field(b, "value"), source);
               send_json(res, {{"image_id", e.image_id},
                               {"attribute", e.attribute},
                               {"old", label_name(e.old_value)},
                               {"new", label_name(e.new_value)},
                               {"timestamp", e.timestamp}});
             });
           }));

  // --- duplicate pairs ------------------------------------------------------

  srv.Get(proj + "/pairs", guarded([locked](const httplib::Request& req, httplib::Response& res) {
            const std::string status =
                req.has_param("status") ? req.get_param_value("status") : "all";
            locked(req, [&](ProjectSlot& s) {
              json rows = json::array();
              const PairQueue& q = s.project.pairs();
              if (status == "all") {
                for (const auto& r : q.records()) rows.push_back(pair_json(r));
              } else if (status == "pending") {
                for (const auto* r : q.pending()) rows.push_back(pair_json(*r));
              } else if (status == "arbitration") {
                for (const auto* r : q.arbitration_queue()) rows.push_back(pair_json(*r));
              } else {
                throw Error(ErrorCode::Validation, "status must be all, pending or arbitration");
              }
              send_json(res, {{"pairs", rows}});
            });
          }));

  // Builds the review queue from the project embeddings.
  srv.Post(proj + "/pairs", guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const double threshold = b.value("threshold", kDefaultDuplicateThreshold);
             locked(req, [&](ProjectSlot& s) {
               const EmbeddingStore* store = s.project.embeddings();
               if (!store) throw Error(ErrorCode::Validation, "project has no embeddings");
               if (!s.project.pairs().records().empty() && !b.value("replace", false)) {
                 throw Error(ErrorCode::Validation,
                             "pair queue exists; pass replace=true to rebuild it");
               }
               s.project.pairs() = PairQueue(find_candidate_pairs(*store, threshold));
               s.project.save_pairs();
               send_json(res, {{"pairs", s.project.pairs().records().size()}}, 201);
             });
           }));

  srv.Post(proj + "/pairs/:id/verdict",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const auto id = parse_id(param(req, "id"), ErrorCode::UnknownPair);
             const auto verdict = parse_verdict(required_string(b, "verdict"));
             if (!verdict) throw Error(ErrorCode::Validation, "unknown verdict");
             locked(req, [&](ProjectSlot& s) {
               VerdictOutcome outcome;
               try {
                 outcome = s.project.pairs().record_verdict(id, *verdict,
                                                            required_string(b, "reviewer"));
               } catch (const Error& e) {
                 // The arbitration flag is state worth keeping.
                 if (e.code() == ErrorCode::VerdictConflict) s.project.save_pairs();
                 throw;
               }
               s.project.save_pairs();
               json out = pair_json(s.project.pairs().get(id));
               out["outcome"] = outcome == VerdictOutcome::Recorded ? "RECORDED" : "UNCHANGED";
               send_json(res, out);
             });
           }));

  srv.Post(proj + "/pairs/:id/arbitrate",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const auto id = parse_id(param(req, "id"), ErrorCode::UnknownPair);
             const auto verdict = parse_verdict(required_string(b, "verdict"));
             if (!verdict) throw Error(ErrorCode::Validation, "unknown verdict");
             locked(req, [&](ProjectSlot& s) {
               s.project.pairs().resolve_arbitration(id, *verdict, required_string(b, "arbiter"));
               s.project.save_pairs();
               send_json(res, pair_json(s.project.pairs().get(id)));
             });
           }));

  // --- audit sessions -------------------------------------------------------

  srv.Get(proj + "/audit/sessions",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            locked(req, [&](ProjectSlot& s) {
              json rows = json::array();
              for (const auto& [id, session] : s.project.sessions()) {
                rows.push_back(session_json(id, session, std::nullopt));
              }
              send_json(res, {{"sessions", rows}});
            });
          }));

  srv.Post(proj + "/audit/sessions",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             locked(req, [&](ProjectSlot& s) {
               SamplingPlan plan = sampling_plan(
                   s.project.original(), required_string(b, "attribute"), label_field(b, "value"),
                   b.value("min_per_value", std::size_t{500}), b.value("seed", std::uint64_t{0}));
               const std::string id = s.project.add_session(AuditSession(std::move(plan)));
               send_json(res, session_json(id, s.project.session(id), std::nullopt), 201);
             });
           }));

  srv.Get(proj + "/audit/sessions/:sid",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            std::optional<Pass> pass;
            if (req.has_param("pass")) pass = parse_pass(req.get_param_value("pass"));
            locked(req, [&](ProjectSlot& s) {
              const std::string sid = param(req, "sid");
              send_json(res, session_json(sid, s.project.session(sid), pass));
            });
          }));

  srv.Post(proj + "/audit/sessions/:sid/labels",
           guarded([locked, submit_label](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const Pass pass = parse_pass(required_string(b, "pass"));
             const std::string image = required_string(b, "image_id");
             locked(req, [&](ProjectSlot& s) {
               const std::string sid = param(req, "sid");
               submit_label(s, sid, pass, image, label_field(b, "value"),
                            required_string(b, "annotator"));
               send_json(res, {{"session_id", sid}, {"image_id", image}, {"recorded", true}});
             });
           }));

  srv.Post(proj + "/audit/sessions/:sid/reconcile",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             locked(req, [&](ProjectSlot& s) {
               const std::string sid = param(req, "sid");
               AuditSession& session = s.project.session(sid);
               session.resolve(required_string(b, "image_id"), label_field(b, "value"));
               s.project.save_session(sid);
               send_json(res, session_json(sid, session, std::nullopt));
             });
           }));

  srv.Post(proj + "/audit/sessions/:sid/close",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             locked(req, [&](ProjectSlot& s) {
               const std::string sid = param(req, "sid");
               AuditSession& session = s.project.session(sid);
               session.close();
               s.project.save_session(sid);
               send_json(res, session_json(sid, session, std::nullopt));
             });
           }));

  // --- workflows ------------------------------------------------------------

  srv.Post(proj + "/workflow", guarded([locked](const httplib::Request& req,
                                                httplib::Response& res) {
             const json b = body_of(req);
             const WorkflowConfig config = workflow_config_from_json(
                 b.contains("config") ? b.at("config").dump() : std::string("{}"));
             const Split split = parse_split(b.value("seed_split", std::string("train")));
             locked(req, [&](ProjectSlot& s) {
               const std::string id = s.project.create_workflow_from_split(
                   required_string(b, "attribute"), split, config);
               send_json(res, workflow_json(id, s.project.workflow(id)), 201);
             });
           }));

  srv.Get(proj + "/workflow/:wid/status",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            locked(req, [&](ProjectSlot& s) {
              const std::string wid = param(req, "wid");
              send_json(res, workflow_json(wid, s.project.workflow(wid)));
            });
          }));

  srv.Post(proj + "/workflow/:wid/round",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             locked(req, [&](ProjectSlot& s) {
               const std::string wid = param(req, "wid");
               const EmbeddingStore* store = s.project.embeddings();
               if (!store) throw Error(ErrorCode::Validation, "project has no embeddings");
               WorkflowState& w = s.project.workflow(wid);
               run_round(w, *store);
               s.project.save_workflow(wid);
               send_json(res, workflow_json(wid, w));
             });
           }));

  srv.Get(proj + "/workflow/:wid/bins/:votes/sample",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            const std::size_t votes = parse_votes(param(req, "votes"));
            locked(req, [&](ProjectSlot& s) {
              const std::string wid = param(req, "wid");
              send_json(res, {{"votes", votes},
                              {"sample", audit_sample(s.project.workflow(wid), votes)}});
            });
          }));

  // Body: {"answers": {id: label}} or {"session_id": closed audit session}.
  srv.Post(proj + "/workflow/:wid/bins/:votes/audit",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const std::size_t votes = parse_votes(param(req, "votes"));
             locked(req, [&](ProjectSlot& s) {
               const std::string wid = param(req, "wid");
               WorkflowState& w = s.project.workflow(wid);
               if (b.contains("session_id")) {
                 audit_bin(w, votes, s.project.session(required_string(b, "session_id")));
               } else {
                 if (!b.contains("answers")) throw Error(ErrorCode::Validation, "missing answers");
                 audit_bin(w, votes, label_map(b.at("answers")));
               }
               s.project.save_workflow(wid);
               send_json(res, workflow_json(wid, w));
             });
           }));

  srv.Post(proj + "/workflow/:wid/bins/:votes/manual",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             const std::size_t votes = parse_votes(param(req, "votes"));
             if (!b.contains("labels")) throw Error(ErrorCode::Validation, "missing labels");
             const auto labels = label_map(b.at("labels"));
             locked(req, [&](ProjectSlot& s) {
               const std::string wid = param(req, "wid");
               WorkflowState& w = s.project.workflow(wid);
               mark_manual(w, votes, labels);
               s.project.save_workflow(wid);
               send_json(res, workflow_json(wid, w));
             });
           }));

  srv.Post(proj + "/workflow/:wid/bins/:votes/defer",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const std::size_t votes = parse_votes(param(req, "votes"));
             locked(req, [&](ProjectSlot& s) {
               const std::string wid = param(req, "wid");
               WorkflowState& w = s.project.workflow(wid);
               defer_bin(w, votes);
               s.project.save_workflow(wid);
               send_json(res, workflow_json(wid, w));
             });
           }));

  srv.Post(proj + "/workflow/:wid/apply",
           guarded([locked](const httplib::Request& req, httplib::Response& res) {
             const json b = body_of(req);
             locked(req, [&](ProjectSlot& s) {
               const std::string wid = param(req, "wid");
               const std::size_t n =
                   s.project.apply_workflow(wid, b.value("source", "workflow:" + wid));
               send_json(res, {{"workflow_id", wid}, {"applied", n}});
             });
           }));

  // --- reports --------------------------------------------------------------

  srv.Get(proj + "/reports/consistency",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            const std::string sid = req.get_param_value("session");
            if (sid.empty()) throw Error(ErrorCode::Validation, "session parameter is required");
            locked(req, [&](ProjectSlot& s) {
              const AuditSession& session = s.project.session(sid);
              if (session.status() == SessionStatus::Open) {
                throw Error(ErrorCode::Validation,
                            "pass labels stay hidden until both passes are complete");
              }
              const auto rows =
                  disagreement_counts(pass_matrix(session, Pass::A), pass_matrix(session, Pass::B));
              send_report(res, req, [&](std::ostream& out, OutputFormat f) {
                write_disagreement_report(out, rows, f);
              });
            });
          }));

  srv.Get(proj + "/reports/pin",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            std::vector<std::string> exclude;
            if (req.has_param("exclude")) {
              for (auto part : split_char(req.get_param_value("exclude"), ',')) {
                if (!part.empty()) exclude.emplace_back(part);
              }
            }
            locked(req, [&](ProjectSlot& s) {
              const auto counts = attribute_conflicts(s.project.pairs().records(),
                                                      s.project.matrix());
              const auto rows = pin_report(counts, exclude);
              send_report(res, req, [&](std::ostream& out, OutputFormat f) {
                write_pin_report(out, rows, f);
              });
            });
          }));

  srv.Get(proj + "/reports/errors",
          guarded([locked](const httplib::Request& req, httplib::Response& res) {
            locked(req, [&](ProjectSlot& s) {
              std::vector<AuditSession> closed;
              for (const auto& [_, session] : s.project.sessions()) {
                if (session.status() == SessionStatus::Closed) closed.push_back(session);
              }
              const auto rows = error_rates(closed, s.project.original());
              send_report(res, req, [&](std::ostream& out, OutputFormat f) {
                write_error_rate_report(out, rows, f);
              });
            });
          }));

  srv.Post(proj + "/export", guarded([locked](const httplib::Request& req,
                                              httplib::Response& res) {
             const json b = body_of(req);
             locked(req, [&](ProjectSlot& s) {
               const std::string name = b.value("name", std::string("export.txt"));
               if (name.find('/') != std::string::npos || name.empty() || name.front() == '.') {
                 throw Error(ErrorCode::Validation, "export name must be a plain file name");
               }
               const fs::path path = s.project.dir() / "exports" / name;
               fs::create_directories(path.parent_path());
               const ExportSummary sum = s.project.export_to(path);
               send_json(res, {{"path", path.string()},
                               {"rows", sum.rows},
                               {"info_not_visible_cells", sum.info_not_visible_cells},
                               {"unusable_images", sum.unusable_images}});
             });
           }));

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) {
      send_json(res, error_body(ErrorCode::Validation, "no such endpoint"), 404);
    }
  });
}

}  // namespace labelforge
