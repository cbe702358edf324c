#include "soco/models.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace soco::models {

using nlohmann::json;

void MlpWeights::validate() const {
  if (layers.empty()) fail(ErrorKind::config, "mlp needs at least one layer");
  if (n_classes < 1) fail(ErrorKind::config, "mlp needs at least one class");
  std::size_t in = layers[0].weights.empty() ? 0 : layers[0].weights[0].size();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    if (layer.weights.empty()) fail(ErrorKind::config, "mlp layer " + std::to_string(l) + " has no outputs");
    for (const auto& row : layer.weights)
      if (row.size() != in) fail(ErrorKind::config, "mlp layer " + std::to_string(l) + " has inconsistent input width");
    if (layer.bias.size() != layer.weights.size())
      fail(ErrorKind::config, "mlp layer " + std::to_string(l) + " bias length mismatch");
    in = layer.weights.size();
  }
  if (in != n_classes) fail(ErrorKind::config, "final mlp layer width differs from n_classes");
}

MlpWeights parse_mlp_weights(const std::string& json_text) {
  MlpWeights w;
  try {
    const json j = json::parse(json_text);
    w.n_classes = j.at("n_classes").get<std::size_t>();
    for (const json& lj : j.at("layers")) {
      Layer layer;
      layer.weights = lj.at("weights").get<std::vector<std::vector<double>>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      const std::string act = lj.value("activation", "identity");
      if (act == "relu") layer.activation = Activation::relu;
      else if (act == "identity") layer.activation = Activation::identity;
      else fail(ErrorKind::config, "unknown activation '" + act + "'");
      w.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("bad mlp weights: ") + e.what());
  }
  w.validate();
  return w;
}

MlpWeights read_mlp_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open weights file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mlp_weights(ss.str());
}

std::vector<std::vector<double>> mlp_predict(const MlpWeights& weights, std::span<const Sample> batch) {
  const std::size_t in = weights.layers[0].weights[0].size();
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Sample& x : batch) {
    if (x.shape.grid || x.features.size() != in)
      fail("mlp expects flat samples with " + std::to_string(in) + " features");
    std::vector<double> a = x.features;
    for (const Layer& layer : weights.layers) {
      std::vector<double> z(layer.bias);
      for (std::size_t o = 0; o < z.size(); ++o)
        for (std::size_t i = 0; i < a.size(); ++i) z[o] += layer.weights[o][i] * a[i];
      if (layer.activation == Activation::relu)
        for (double& v : z) v = std::max(v, 0.0);
      a = std::move(z);
    }
    const double peak = *std::max_element(a.begin(), a.end());
    double sum = 0.0;
    for (double& v : a) sum += (v = std::exp(v - peak));
    for (double& v : a) v /= sum;
    out.push_back(std::move(a));
  }
  return out;
}

MlpModel::MlpModel(MlpWeights weights) : weights_(std::move(weights)) { weights_.validate(); }

ProbMatrix MlpModel::predict_probs(std::span<const Sample> batch) const {
  const auto rows = mlp_predict(weights_, batch);
  ProbMatrix probs(rows.size(), weights_.n_classes);
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), probs.row(r).begin());
  return probs;
}

std::string to_string(BridgeFailure f) {
  switch (f) {
    case BridgeFailure::timeout: return "timeout";
    case BridgeFailure::malformed: return "malformed";
    case BridgeFailure::id_mismatch: return "id_mismatch";
    case BridgeFailure::bad_probabilities: return "bad_probabilities";
    case BridgeFailure::crashed: return "crashed";
    case BridgeFailure::launch: return "launch";
  }
  return "unknown";
}

void ExternalModelSpec::validate() const {
  if (command.empty()) fail(ErrorKind::config, "external model needs a launch command");
  if (batch_limit < 1) fail(ErrorKind::config, "batch size limit must be at least 1");
  if (timeout.count() <= 0) fail(ErrorKind::config, "request timeout must be positive");
  if (n_classes < 1) fail(ErrorKind::config, "external model needs at least one class");
}

struct ExternalModel::Child {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string pending;  // bytes read past the last newline
};

namespace {

// Thrown internally when the child goes away mid-call.
struct ChildGone {};

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

ExternalModel::ExternalModel(ExternalModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::signal(SIGPIPE, SIG_IGN);
  launch();
}

ExternalModel::~ExternalModel() { shutdown(); }

void ExternalModel::launch() const {
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) throw BridgeError(BridgeFailure::launch, "pipe: " + std::string(std::strerror(errno)));
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw BridgeError(BridgeFailure::launch, "pipe: " + std::string(std::strerror(errno)));
  }
  std::vector<char*> argv;
  for (const std::string& a : spec_.command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw BridgeError(BridgeFailure::launch, "fork: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execvp(argv[0], argv.data());
    _exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  auto child = std::make_unique<Child>();
  child->pid = pid;
  child->to_child = in_pipe[1];
  child->from_child = out_pipe[0];
  ::fcntl(child->to_child, F_SETFL, ::fcntl(child->to_child, F_GETFL) | O_NONBLOCK);
  ::fcntl(child->from_child, F_SETFL, ::fcntl(child->from_child, F_GETFL) | O_NONBLOCK);
  child_ = std::move(child);
}

void ExternalModel::shutdown() const {
  if (!child_) return;
  close_fd(child_->to_child);
  close_fd(child_->from_child);
  // Closing stdin asks the child to exit; give it a moment, then kill.
  for (int i = 0; i < 50; ++i) {
    if (::waitpid(child_->pid, nullptr, WNOHANG) == child_->pid) {
      child_.reset();
      return;
    }
    ::usleep(2000);
  }
  ::kill(child_->pid, SIGKILL);
  ::waitpid(child_->pid, nullptr, 0);
  child_.reset();
}

ProbMatrix ExternalModel::predict_probs(std::span<const Sample> batch) const {
  std::lock_guard lock(mutex_);
  if (batch.empty()) return ProbMatrix(0, spec_.n_classes);
  for (;;) {
    try {
      if (!child_) launch();
      return exchange(batch);
    } catch (const ChildGone&) {
      shutdown();
      if (restarts_ >= 1) throw BridgeError(BridgeFailure::crashed, "model server exited again after a restart");
      ++restarts_;
    } catch (...) {
      // A protocol error leaves the channel in an unknown state.
      shutdown();
      throw;
    }
  }
}

ProbMatrix ExternalModel::exchange(std::span<const Sample> batch) const {
  const std::size_t C = spec_.n_classes;
  // One request per chunk of at most batch_limit samples.
  struct Chunk {
    std::size_t offset, size;
  };
  std::map<std::uint64_t, Chunk> outstanding;
  std::string out;
  for (std::size_t off = 0; off < batch.size(); off += spec_.batch_limit) {
    const std::size_t size = std::min(spec_.batch_limit, batch.size() - off);
    const std::uint64_t id = next_id_++;
    json req;
    req["id"] = id;
    json inputs = json::array();
    for (std::size_t i = off; i < off + size; ++i) inputs.push_back(batch[i].features);
    req["inputs"] = std::move(inputs);
    out += req.dump() + "\n";
    outstanding.emplace(id, Chunk{off, size});
  }

  ProbMatrix probs(batch.size(), C);
  std::size_t written = 0;
  Child& ch = *child_;
  auto last_progress = std::chrono::steady_clock::now();
  char buf[65536];

  auto handle_line = [&](const std::string& line) {
    json resp;
    try {
      resp = json::parse(line);
    } catch (const json::exception&) {
      throw BridgeError(BridgeFailure::malformed, "unparseable response line");
    }
    if (!resp.is_object() || !resp.contains("id") || !resp.contains("probs") || !resp["id"].is_number_unsigned() ||
        !resp["probs"].is_array())
      throw BridgeError(BridgeFailure::malformed, "response lacks id/probs");
    const std::uint64_t id = resp["id"].get<std::uint64_t>();
    auto it = outstanding.find(id);
    if (it == outstanding.end())
      throw BridgeError(BridgeFailure::id_mismatch, "response id " + std::to_string(id) + " was not requested");
    const json& rows = resp["probs"];
    if (rows.size() != it->second.size) throw BridgeError(BridgeFailure::malformed, "response row count mismatch");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].is_array() || rows[r].size() != C)
        throw BridgeError(BridgeFailure::bad_probabilities, "probability vector has wrong length");
      double sum = 0.0;
      auto dst = probs.row(it->second.offset + r);
      for (std::size_t k = 0; k < C; ++k) {
        if (!rows[r][k].is_number()) throw BridgeError(BridgeFailure::malformed, "non-numeric probability");
        const double p = rows[r][k].get<double>();
        if (!std::isfinite(p) || p < 0.0) throw BridgeError(BridgeFailure::bad_probabilities, "negative probability");
        dst[k] = p;
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw BridgeError(BridgeFailure::bad_probabilities, "probabilities sum to " + format_real(sum));
    }
    outstanding.erase(it);
  };

  while (!outstanding.empty()) {
    pollfd fds[2];
    nfds_t nfds = 0;
    fds[nfds++] = {ch.from_child, POLLIN, 0};
    if (written < out.size()) fds[nfds++] = {ch.to_child, POLLOUT, 0};

    const auto waited = std::chrono::steady_clock::now() - last_progress;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(spec_.timeout - waited).count();
    if (left <= 0) throw BridgeError(BridgeFailure::timeout, "model server did not respond in time");
    const int rc = ::poll(fds, nfds, static_cast<int>(left));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw BridgeError(BridgeFailure::crashed, "poll: " + std::string(std::strerror(errno)));
    }
    if (rc == 0) continue;

    if (nfds > 1 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t n = ::write(ch.to_child, out.data() + written, out.size() - written);
      if (n < 0 && errno != EAGAIN && errno != EINTR) throw ChildGone{};
      if (n > 0) {
        written += static_cast<std::size_t>(n);
        last_progress = std::chrono::steady_clock::now();
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(ch.from_child, buf, sizeof buf);
      if (n == 0) throw ChildGone{};
      if (n < 0) {
        if (errno == EAGAIN || errno == EINTR) continue;
        throw ChildGone{};
      }
      last_progress = std::chrono::steady_clock::now();
      ch.pending.append(buf, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = ch.pending.find('\n')) != std::string::npos) {
        std::string line = ch.pending.substr(0, nl);
        ch.pending.erase(0, nl + 1);
        if (!line.empty()) handle_line(line);
      }
    }
  }
  return probs;
}

}  // namespace soco::models
