#pragma once

#include "caai/bus/message.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace caai::bus {

struct TopicHandle {
  std::string name;
  BusClass bus_class = BusClass::data;
};

/// Identifies one member of one consumer group. A handle becomes stale once
/// the member is unsubscribed, even if the same member id joins again.
struct Subscriber {
  std::string topic;
  std::string group;
  std::string member;
  std::uint64_t token = 0;
};

struct TopicStats {
  std::string topic;
  BusClass bus_class = BusClass::data;
  std::uint64_t appends = 0;
  std::uint64_t rejections = 0;
};

using Clock = std::function<Timestamp()>;

Clock system_clock();
/// Monotone counter clock for deterministic runs.
Clock logical_clock();

/// In-process broker with one append-only log per topic.
///
/// Every operation takes the broker lock, so publishes, polls and
/// subscriptions are atomic with respect to logs and cursors. A consumer
/// group assigns each offset to exactly one member, round-robin over the
/// members present when the offset is first handed out; distinct groups are
/// independent and each sees the whole log from offset 0.
class Broker {
 public:
  explicit Broker(Clock clock = system_clock());

  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  TopicHandle create_topic(const std::string& name, BusClass bus_class);
  bool has_topic(const std::string& name) const;
  std::vector<std::string> topics() const;

  int register_schema(const std::string& topic, std::vector<FieldSpec> fields);
  Schema schema(const std::string& topic, int version) const;
  Schema latest_schema(const std::string& topic) const;
  int schema_versions(const std::string& topic) const;

  std::uint64_t publish(const std::string& topic, Payload payload,
                        std::optional<std::string> key = std::nullopt);

  Subscriber subscribe(const std::string& topic, const std::string& group,
                       const std::string& member);
  void unsubscribe(const Subscriber& sub);

  /// Non-blocking; returns an empty vector when the member is caught up.
  std::vector<Message> poll(const Subscriber& sub, std::size_t max_batch);

  std::size_t log_size(const std::string& topic) const;
  TopicStats stats(const std::string& topic) const;
  std::vector<TopicStats> all_stats() const;

  /// `topic,bus_class,appends,rejections`, topics in name order.
  void write_stats_csv(std::ostream& out) const;

 private:
  struct Member {
    std::string id;
    std::uint64_t token = 0;
    std::deque<std::uint64_t> pending;  // ascending
    std::optional<std::uint64_t> last_delivered;
  };

  struct Group {
    std::vector<Member> members;
    std::uint64_t assigned_upto = 0;
    std::size_t next_member = 0;
    std::deque<std::uint64_t> backlog;  // orphans nobody could take in order
  };

  struct Topic {
    BusClass bus_class = BusClass::data;
    std::vector<Schema> schemas;
    std::vector<Message> log;
    std::uint64_t rejections = 0;
    std::map<std::string, Group> groups;
  };

  Topic& topic_locked(const std::string& name);
  const Topic& topic_locked(const std::string& name) const;
  static void assign_pending(Group& g, std::uint64_t log_size);
  Member& member_locked(Topic& t, const Subscriber& sub);

  mutable std::mutex mutex_;
  Clock clock_;
  std::map<std::string, Topic> topics_;
  std::uint64_t next_token_ = 1;
};

/// Parses one schema document: {"topic": str, "fields": [{"name", "kind",
/// "required"}]}.
Schema parse_schema_json(const std::string& text);

/// Registers every `*.json` schema file of `dir` in file-name order.
/// Topics must already exist. Returns the number of files loaded.
std::size_t load_schema_dir(Broker& broker, const std::filesystem::path& dir);

}  // namespace caai::bus
