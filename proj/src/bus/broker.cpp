#include "caai/bus/broker.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace caai::bus {

Clock system_clock() {
  return [] {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    return Timestamp{std::chrono::duration_cast<std::chrono::nanoseconds>(now).count()};
  };
}

Clock logical_clock() {
  auto counter = std::make_shared<std::atomic<std::int64_t>>(0);
  return [counter] { return Timestamp{counter->fetch_add(1)}; };
}

Broker::Broker(Clock clock) : clock_(std::move(clock)) {}

Broker::Topic& Broker::topic_locked(const std::string& name) {
  auto it = topics_.find(name);
  if (it == topics_.end())
    throw BusError(BusError::Code::unknown_topic, "unknown topic '" + name + "'");
  return it->second;
}

const Broker::Topic& Broker::topic_locked(const std::string& name) const {
  auto it = topics_.find(name);
  if (it == topics_.end())
    throw BusError(BusError::Code::unknown_topic, "unknown topic '" + name + "'");
  return it->second;
}

TopicHandle Broker::create_topic(const std::string& name, BusClass bus_class) {
  if (name.empty())
    throw BusError(BusError::Code::invalid_argument, "empty topic name");
  std::lock_guard lock(mutex_);
  if (topics_.count(name))
    throw BusError(BusError::Code::duplicate_topic, "duplicate topic '" + name + "'");
  topics_[name].bus_class = bus_class;
  return TopicHandle{name, bus_class};
}

bool Broker::has_topic(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return topics_.count(name) > 0;
}

std::vector<std::string> Broker::topics() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [name, _] : topics_) out.push_back(name);
  return out;
}

int Broker::register_schema(const std::string& topic, std::vector<FieldSpec> fields) {
  std::set<std::string> names;
  for (const auto& f : fields) {
    if (f.name.empty())
      throw BusError(BusError::Code::malformed_schema, "empty field name");
    if (!names.insert(f.name).second)
      throw BusError(BusError::Code::malformed_schema,
                     "duplicate field '" + f.name + "' in schema for '" + topic + "'");
  }
  std::lock_guard lock(mutex_);
  Topic& t = topic_locked(topic);
  Schema s{topic, static_cast<int>(t.schemas.size()) + 1, std::move(fields)};
  t.schemas.push_back(std::move(s));
  return t.schemas.back().version;
}

Schema Broker::schema(const std::string& topic, int version) const {
  std::lock_guard lock(mutex_);
  const Topic& t = topic_locked(topic);
  if (version < 1 || version > static_cast<int>(t.schemas.size()))
    throw BusError(BusError::Code::no_schema,
                   "topic '" + topic + "' has no schema version " + std::to_string(version));
  return t.schemas[version - 1];
}

Schema Broker::latest_schema(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  const Topic& t = topic_locked(topic);
  if (t.schemas.empty())
    throw BusError(BusError::Code::no_schema, "topic '" + topic + "' has no schema");
  return t.schemas.back();
}

int Broker::schema_versions(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(topic_locked(topic).schemas.size());
}

std::uint64_t Broker::publish(const std::string& topic, Payload payload,
                              std::optional<std::string> key) {
  std::lock_guard lock(mutex_);
  Topic& t = topic_locked(topic);
  if (t.schemas.empty()) {
    ++t.rejections;
    throw BusError(BusError::Code::no_schema, "topic '" + topic + "' has no schema");
  }
  const Schema& latest = t.schemas.back();
  if (auto reason = validate(latest, payload); !reason.empty()) {
    ++t.rejections;
    throw BusError(BusError::Code::schema_violation, topic + ": " + reason);
  }
  Message m;
  m.topic = topic;
  m.key = std::move(key);
  m.payload = std::move(payload);
  m.produced_at = clock_();
  m.offset = t.log.size();
  m.schema_version = latest.version;
  t.log.push_back(std::move(m));
  return t.log.back().offset;
}

void Broker::assign_pending(Group& g, std::uint64_t log_size) {
  if (g.members.empty()) return;
  while (g.assigned_upto < log_size) {
    g.next_member %= g.members.size();
    g.members[g.next_member].pending.push_back(g.assigned_upto++);
    ++g.next_member;
  }
}

Subscriber Broker::subscribe(const std::string& topic, const std::string& group,
                             const std::string& member) {
  if (group.empty() || member.empty())
    throw BusError(BusError::Code::invalid_argument, "empty group or member id");
  std::lock_guard lock(mutex_);
  Topic& t = topic_locked(topic);
  Group& g = t.groups[group];
  for (const auto& m : g.members)
    if (m.id == member)
      throw BusError(BusError::Code::duplicate_member,
                     "member '" + member + "' already in group '" + group + "'");
  Member m;
  m.id = member;
  m.token = next_token_++;
  m.pending.assign(g.backlog.begin(), g.backlog.end());
  g.backlog.clear();
  g.members.push_back(std::move(m));
  return Subscriber{topic, group, member, g.members.back().token};
}

Broker::Member& Broker::member_locked(Topic& t, const Subscriber& sub) {
  auto git = t.groups.find(sub.group);
  if (git != t.groups.end())
    for (auto& m : git->second.members)
      if (m.id == sub.member && m.token == sub.token) return m;
  throw BusError(BusError::Code::stale_handle,
                 "stale subscriber '" + sub.member + "' in group '" + sub.group + "'");
}

void Broker::unsubscribe(const Subscriber& sub) {
  std::lock_guard lock(mutex_);
  Topic& t = topic_locked(sub.topic);
  member_locked(t, sub);  // validates the handle
  Group& g = t.groups[sub.group];
  auto it = std::find_if(g.members.begin(), g.members.end(),
                         [&](const Member& m) { return m.token == sub.token; });
  std::deque<std::uint64_t> orphans = std::move(it->pending);
  std::size_t removed = static_cast<std::size_t>(it - g.members.begin());
  g.members.erase(it);
  if (g.next_member > removed) --g.next_member;

  // Undelivered offsets move to a member that has not yet read past them.
  std::size_t rr = 0;
  for (std::uint64_t o : orphans) {
    bool placed = false;
    for (std::size_t k = 0; k < g.members.size() && !placed; ++k) {
      Member& m = g.members[(rr + k) % g.members.size()];
      if (m.last_delivered && *m.last_delivered > o) continue;
      m.pending.insert(std::upper_bound(m.pending.begin(), m.pending.end(), o), o);
      rr = (rr + k + 1) % g.members.size();
      placed = true;
    }
    if (!placed) g.backlog.push_back(o);
  }
}

std::vector<Message> Broker::poll(const Subscriber& sub, std::size_t max_batch) {
  if (max_batch == 0)
    throw BusError(BusError::Code::invalid_argument, "max_batch must be positive");
  std::lock_guard lock(mutex_);
  Topic& t = topic_locked(sub.topic);
  Member& m = member_locked(t, sub);
  assign_pending(t.groups[sub.group], t.log.size());
  std::vector<Message> out;
  while (!m.pending.empty() && out.size() < max_batch) {
    out.push_back(t.log[m.pending.front()]);
    m.last_delivered = m.pending.front();
    m.pending.pop_front();
  }
  return out;
}

std::size_t Broker::log_size(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  return topic_locked(topic).log.size();
}

TopicStats Broker::stats(const std::string& topic) const {
  std::lock_guard lock(mutex_);
  const Topic& t = topic_locked(topic);
  return TopicStats{topic, t.bus_class, t.log.size(), t.rejections};
}

std::vector<TopicStats> Broker::all_stats() const {
  std::lock_guard lock(mutex_);
  std::vector<TopicStats> out;
  for (const auto& [name, t] : topics_)
    out.push_back(TopicStats{name, t.bus_class, t.log.size(), t.rejections});
  return out;
}

void Broker::write_stats_csv(std::ostream& out) const {
  out << "topic,bus_class,appends,rejections\n";
  for (const auto& s : all_stats())
    out << s.topic << ',' << to_string(s.bus_class) << ',' << s.appends << ','
        << s.rejections << '\n';
}

Schema parse_schema_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BusError(BusError::Code::malformed_schema, std::string("schema json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("topic") || !j.contains("fields") ||
      !j["topic"].is_string() || !j["fields"].is_array())
    throw BusError(BusError::Code::malformed_schema,
                   "schema document needs 'topic' and 'fields'");
  Schema s;
  s.topic = j["topic"].get<std::string>();
  for (const auto& f : j["fields"]) {
    if (!f.contains("name") || !f.contains("kind"))
      throw BusError(BusError::Code::malformed_schema, "field needs 'name' and 'kind'");
    FieldSpec spec;
    spec.name = f["name"].get<std::string>();
    spec.kind = parse_field_kind(f["kind"].get<std::string>());
    spec.required = f.value("required", true);
    s.fields.push_back(std::move(spec));
  }
  return s;
}

std::size_t load_schema_dir(Broker& broker, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    Schema s = parse_schema_json(ss.str());
    broker.register_schema(s.topic, std::move(s.fields));
  }
  return files.size();
}

}  // namespace caai::bus
