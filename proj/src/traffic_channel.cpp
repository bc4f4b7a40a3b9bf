#include "rtsched/traffic_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rtsched {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::vector<RandomStream> make_streams(std::uint64_t seed, StreamDomain d, std::size_t n) {
    std::vector<RandomStream> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.emplace_back(seed, d, i);
    return v;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ static_cast<std::uint64_t>(domain) * 0xd1342543de82ef95ULL);
    const std::uint64_t c = splitmix64(b ^ (index + 1) * 0xff51afd7ed558ccdULL);
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

double RandomStream::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t RandomStream::below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below: n must be > 0");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
}

ChannelModel ChannelModel::on_off(double p_on) {
    ChannelModel m;
    m.kind = Kind::OnOff;
    m.p_on = p_on;
    return m;
}

ChannelModel ChannelModel::rayleigh(double mean_gain, double gamma_max) {
    ChannelModel m;
    m.kind = Kind::Rayleigh;
    m.mean_gain = mean_gain;
    m.gamma_max = gamma_max;
    return m;
}

ChannelModel ChannelModel::discrete(std::vector<double> states, std::vector<double> probs) {
    ChannelModel m;
    m.kind = Kind::Discrete;
    m.states = std::move(states);
    m.probs = std::move(probs);
    return m;
}

void ChannelModel::validate() const {
    switch (kind) {
    case Kind::OnOff:
        require(p_on >= 0.0 && p_on <= 1.0, "channel.p_on must lie in [0,1]");
        break;
    case Kind::Rayleigh:
        require(std::isfinite(mean_gain) && mean_gain > 0.0, "channel.mean_gain must be > 0");
        require(std::isfinite(gamma_max) && gamma_max > 0.0, "channel.gamma_max must be finite and > 0");
        break;
    case Kind::Discrete: {
        require(!states.empty(), "channel.states must be non-empty");
        require(states.size() == probs.size(), "channel.states and channel.probs differ in length");
        for (double s : states) require(std::isfinite(s) && s >= 0.0, "channel.states must be finite and >= 0");
        for (double p : probs) require(p >= 0.0, "channel.probs must be >= 0");
        const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
        require(std::abs(total - 1.0) <= 1e-9, "channel.probs must sum to 1");
        break;
    }
    }
}

double ChannelModel::max_gain() const {
    switch (kind) {
    case Kind::OnOff: return 1.0;
    case Kind::Rayleigh: return gamma_max;
    case Kind::Discrete: return *std::max_element(states.begin(), states.end());
    }
    return 0.0;
}

void PacketLengthModel::validate() const {
    if (kind == Kind::Fixed) {
        require(std::isfinite(bits) && bits > 0.0, "packet.bits must be > 0");
    } else {
        require(min_bits > 0.0 && max_bits >= min_bits && std::isfinite(max_bits),
                "packet length range must satisfy 0 < min <= max");
    }
}

double PacketLengthModel::mean_bits() const {
    return kind == Kind::Fixed ? bits : 0.5 * (min_bits + max_bits);
}

void TrafficModel::validate() const {
    for (double l : lambda) require(l >= 0.0 && l <= 1.0, "arrival rates must lie in [0,1]");
    packets.validate();
}

int draw_arrival(RandomStream& rng, double lambda) { return rng.uniform() < lambda ? 1 : 0; }

double draw_gain(RandomStream& rng, const ChannelModel& model) {
    const double u = rng.uniform();
    switch (model.kind) {
    case ChannelModel::Kind::OnOff:
        return u < model.p_on ? 1.0 : 0.0;
    case ChannelModel::Kind::Rayleigh: {
        // Inverse CDF of the exponential truncated to [0, gamma_max].
        const double mass = -std::expm1(-model.gamma_max / model.mean_gain);
        return std::min(model.gamma_max, -model.mean_gain * std::log1p(-u * mass));
    }
    case ChannelModel::Kind::Discrete: {
        double acc = 0.0;
        for (std::size_t m = 0; m < model.states.size(); ++m) {
            acc += model.probs[m];
            if (u < acc) return model.states[m];
        }
        return model.states.back();
    }
    }
    return 0.0;
}

std::vector<int> draw_arrivals(std::span<RandomStream> streams, const TrafficModel& traffic) {
    if (streams.size() != traffic.lambda.size())
        throw std::invalid_argument("draw_arrivals: one stream per user required");
    std::vector<int> out(streams.size());
    for (std::size_t i = 0; i < streams.size(); ++i) out[i] = draw_arrival(streams[i], traffic.lambda[i]);
    return out;
}

std::vector<double> draw_gains(std::span<RandomStream> streams, const ChannelModel& model) {
    std::vector<double> out(streams.size());
    for (std::size_t i = 0; i < streams.size(); ++i) out[i] = draw_gain(streams[i], model);
    return out;
}

SlotSource::SlotSource(std::uint64_t seed, TrafficModel rt_traffic, TrafficModel nrt_traffic,
                       ChannelModel channel)
    : rt_traffic_(std::move(rt_traffic)),
      nrt_traffic_(std::move(nrt_traffic)),
      channel_(std::move(channel)),
      rt_arrival_(make_streams(seed, StreamDomain::RtArrival, rt_traffic_.lambda.size())),
      nrt_arrival_(make_streams(seed, StreamDomain::NrtArrival, nrt_traffic_.lambda.size())),
      rt_gain_(make_streams(seed, StreamDomain::RtGain, rt_traffic_.lambda.size())),
      nrt_gain_(make_streams(seed, StreamDomain::NrtGain, nrt_traffic_.lambda.size())),
      rt_len_(make_streams(seed, StreamDomain::RtLength, rt_traffic_.lambda.size())),
      nrt_len_(make_streams(seed, StreamDomain::NrtLength, nrt_traffic_.lambda.size())),
      shared_len_(seed, StreamDomain::SharedLength, 0) {
    rt_traffic_.validate();
    nrt_traffic_.validate();
    channel_.validate();
}

double SlotSource::draw_bits(const PacketLengthModel& m, RandomStream& own, double shared) const {
    switch (m.kind) {
    case PacketLengthModel::Kind::Fixed: return m.bits;
    case PacketLengthModel::Kind::HomogeneousRandom: return shared;
    case PacketLengthModel::Kind::HeterogeneousRandom:
        return m.min_bits + (m.max_bits - m.min_bits) * own.uniform();
    }
    return m.bits;
}

void SlotSource::next(SlotRealization& out) {
    const std::size_t nr = n_rt();
    const std::size_t nn = n_nrt();
    out.rt_arrivals.resize(nr);
    out.nrt_arrivals.resize(nn);
    out.rt_gains.resize(nr);
    out.nrt_gains.resize(nn);
    out.rt_bits.resize(nr);
    out.nrt_bits.resize(nn);

    const auto& rp = rt_traffic_.packets;
    const auto& np = nrt_traffic_.packets;
    const double u_shared = shared_len_.uniform();
    const double rt_shared = rp.min_bits + (rp.max_bits - rp.min_bits) * u_shared;
    const double nrt_shared = np.min_bits + (np.max_bits - np.min_bits) * u_shared;

    for (std::size_t i = 0; i < nr; ++i) {
        out.rt_arrivals[i] = draw_arrival(rt_arrival_[i], rt_traffic_.lambda[i]);
        out.rt_gains[i] = draw_gain(rt_gain_[i], channel_);
        out.rt_bits[i] = draw_bits(rp, rt_len_[i], rt_shared);
    }
    for (std::size_t i = 0; i < nn; ++i) {
        out.nrt_arrivals[i] = draw_arrival(nrt_arrival_[i], nrt_traffic_.lambda[i]);
        out.nrt_gains[i] = draw_gain(nrt_gain_[i], channel_);
        out.nrt_bits[i] = draw_bits(np, nrt_len_[i], nrt_shared);
    }
}

}  // namespace rtsched
