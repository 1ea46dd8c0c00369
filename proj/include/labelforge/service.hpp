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

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "labelforge/audit.hpp"
#include "labelforge/project.hpp"

namespace httplib {
class Server;
}

namespace labelforge {

using Clock = std::chrono::steady_clock;

/// Exclusive, expiring claims on (session, pass, image) queue items. An
/// annotator is bound to one pass per session on first contact.
class LeaseBook {
public:
  explicit LeaseBook(Clock::duration timeout = std::chrono::minutes(10),
                     std::function<Clock::time_point()> now = &Clock::now)
      : timeout_(timeout), now_(std::move(now)) {}

  struct Lease {
    std::string image_id;
    std::string annotator;
    Clock::time_point expires;
  };

  /// Next item of `pass` for `annotator`: an item they already hold, else the
  /// first unlabeled item nobody else holds. Empty when the queue is drained.
  std::optional<Lease> next(const std::string& session_id, const AuditSession& session, Pass pass,
                            const std::string& annotator);
  /// Throws ANNOTATOR_BOUND when the annotator already works the other pass.
  void bind(const std::string& session_id, Pass pass, const std::string& annotator);
  /// Throws LEASE_NOT_HELD when someone else holds an unexpired lease.
  void check_submit(const std::string& session_id, Pass pass, const std::string& image_id,
                    const std::string& annotator);
  void release(const std::string& session_id, Pass pass, const std::string& image_id);
  Clock::duration timeout() const { return timeout_; }

private:
  using Key = std::tuple<std::string, Pass, std::string>;
  Clock::duration timeout_;
  std::function<Clock::time_point()> now_;
  std::map<Key, Lease> leases_;
  std::map<std::pair<std::string, std::string>, Pass> bindings_;
};

struct ServiceOptions {
  std::filesystem::path data_root;
  std::optional<std::filesystem::path> image_root;  // served under /images
  Clock::duration lease_timeout = std::chrono::minutes(10);
  std::function<Clock::time_point()> clock = &Clock::now;
};

/// HTTP/JSON front end. Every mutating endpoint performs exactly one library
/// operation on one project, under that project's lock, then persists.
class Service {
public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() { return *server_; }
  /// Binds to an ephemeral port on `host` and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  bool bind(const std::string& host, int port);
  /// Blocks until stop().
  void run();
  void stop();

private:
  struct ProjectSlot {
    ProjectSlot(Project p, LeaseBook l) : project(std::move(p)), leases(std::move(l)) {}
    std::mutex mutex;
    Project project;
    LeaseBook leases;
  };

  ProjectSlot& slot(const std::string& project_id);
  void install_routes();

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex projects_mutex_;
  std::map<std::string, std::unique_ptr<ProjectSlot>> projects_;
};

/// HTTP status for a domain error: 404 for unknown resources, 409 for state
/// conflicts, 422 for validation failures, 500 for IO.
int http_status_for(ErrorCode code);

}  // namespace labelforge
