#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "taesar/predictor.hpp"

namespace taesar {

// One training example: a sequence plus (position, target item) loss terms.
// The hidden state at `position` predicts `target`; causal attention makes it
// safe to batch all positions of a sequence in one forward pass.
struct TrainItem {
    std::vector<ItemIndex> seq;
    std::vector<std::pair<int, ItemIndex>> targets;
};

// Causal self-attention decoder with learned positional embeddings,
// pre-layer normalization and tied input/output embeddings. Scalar is float
// for production training and double for gradient checks.
template <typename Scalar>
class Net {
public:
    Net(ItemIndex vocab, const PredictorConfig & cfg) : cfg_(cfg), V_(vocab) {
        cfg_.validate();
        if (vocab < 2) {
            throw config_error("BadConfig: vocabulary must contain at least 2 items");
        }
        H_ = cfg_.hidden_size;
        NH_ = cfg_.heads;
        DH_ = H_ / NH_;
        F_ = cfg_.inner_size;
        L_ = cfg_.layers;
        P_ = cfg_.max_len;

        size_t off = 0;
        auto take = [&off](size_t n) { size_t o = off; off += n; return o; };
        off_emb_ = take(static_cast<size_t>(V_ + 1) * H_);
        off_pos_ = take(static_cast<size_t>(P_) * H_);
        layers_.resize(L_);
        for (auto & lo : layers_) {
            lo.ln1g = take(H_); lo.ln1b = take(H_);
            lo.wq = take(static_cast<size_t>(H_) * H_); lo.bq = take(H_);
            lo.wk = take(static_cast<size_t>(H_) * H_); lo.bk = take(H_);
            lo.wv = take(static_cast<size_t>(H_) * H_); lo.bv = take(H_);
            lo.wo = take(static_cast<size_t>(H_) * H_); lo.bo = take(H_);
            lo.ln2g = take(H_); lo.ln2b = take(H_);
            lo.w1 = take(static_cast<size_t>(H_) * F_); lo.b1 = take(F_);
            lo.w2 = take(static_cast<size_t>(F_) * H_); lo.b2 = take(H_);
        }
        off_lnfg_ = take(H_);
        off_lnfb_ = take(H_);
        n_params_ = off;
        p.assign(n_params_, Scalar(0));
        g.assign(n_params_, Scalar(0));
    }

    const PredictorConfig & config() const { return cfg_; }
    ItemIndex vocab() const { return V_; }
    size_t n_params() const { return n_params_; }

    void init(uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(0.0, 0.02);
        for (auto & w : p) {
            w = Scalar(dist(rng));
        }
        for (const auto & lo : layers_) {
            set_ones(lo.ln1g); set_zero(lo.ln1b);
            set_ones(lo.ln2g); set_zero(lo.ln2b);
            set_zero(lo.bq); set_zero(lo.bk); set_zero(lo.bv); set_zero(lo.bo);
            set_zero(lo.b1); set_zero(lo.b2);
        }
        set_ones(off_lnfg_);
        set_zero(off_lnfb_);
        // Padding row stays zero.
        std::fill(p.begin() + off_emb_, p.begin() + off_emb_ + H_, Scalar(0));
    }

    void zero_grad() { std::fill(g.begin(), g.end(), Scalar(0)); }

    struct Cache {
        int n = 0;
        std::vector<Scalar> x0, d0;
        struct Layer {
            std::vector<Scalar> xin, xhat1, istd1, a, q, k, v, att, ctx, d1,
                xattn, xhat2, istd2, b, f1, d2, xout;
        };
        std::vector<Layer> layer;
        std::vector<Scalar> xhatf, istdf, y;
    };

    // Forward over the whole sequence; fills the cache. `rng` drives dropout
    // and must be non-null when training with dropout > 0.
    void forward(std::span<const ItemIndex> seq, Cache & c, bool training,
                 std::mt19937_64 * rng) const {
        const int n = static_cast<int>(seq.size());
        if (n < 1) {
            throw data_error("EmptyInput: forward over empty sequence");
        }
        if (n > P_) {
            throw data_error("BadInput: sequence length exceeds max_len");
        }
        c.n = n;
        const bool drop = training && cfg_.dropout > 0.0;
        const Scalar keep = Scalar(1.0 - cfg_.dropout);

        c.x0.assign(static_cast<size_t>(n) * H_, Scalar(0));
        c.d0.assign(static_cast<size_t>(n) * H_, Scalar(1));
        for (int i = 0; i < n; ++i) {
            ItemIndex item = seq[i];
            if (item < 0 || item > V_) {
                throw data_error("UnknownItem: index out of vocabulary");
            }
            const Scalar * e = &p[off_emb_ + static_cast<size_t>(item) * H_];
            const Scalar * ps = &p[off_pos_ + static_cast<size_t>(i) * H_];
            Scalar * x = &c.x0[static_cast<size_t>(i) * H_];
            for (int h = 0; h < H_; ++h) {
                x[h] = e[h] + ps[h];
            }
        }
        if (drop) {
            apply_dropout(c.x0, c.d0, keep, *rng);
        }

        c.layer.resize(L_);
        const std::vector<Scalar> * x = &c.x0;
        for (int l = 0; l < L_; ++l) {
            auto & lc = c.layer[l];
            const auto & lo = layers_[l];
            lc.xin = *x;

            layer_norm(lc.xin, lo.ln1g, lo.ln1b, lc.a, lc.xhat1, lc.istd1, n);
            linear(lc.a, lo.wq, lo.bq, lc.q, n, H_, H_);
            linear(lc.a, lo.wk, lo.bk, lc.k, n, H_, H_);
            linear(lc.a, lo.wv, lo.bv, lc.v, n, H_, H_);

            attention_forward(lc, n);

            std::vector<Scalar> ao;
            linear(lc.ctx, lo.wo, lo.bo, ao, n, H_, H_);
            lc.d1.assign(ao.size(), Scalar(1));
            if (drop) {
                apply_dropout(ao, lc.d1, keep, *rng);
            }
            lc.xattn.resize(ao.size());
            for (size_t i = 0; i < ao.size(); ++i) {
                lc.xattn[i] = lc.xin[i] + ao[i];
            }

            layer_norm(lc.xattn, lo.ln2g, lo.ln2b, lc.b, lc.xhat2, lc.istd2, n);
            linear(lc.b, lo.w1, lo.b1, lc.f1, n, H_, F_);
            for (auto & fv : lc.f1) {
                if (fv < Scalar(0)) fv = Scalar(0);
            }
            std::vector<Scalar> f2;
            linear(lc.f1, lo.w2, lo.b2, f2, n, F_, H_);
            lc.d2.assign(f2.size(), Scalar(1));
            if (drop) {
                apply_dropout(f2, lc.d2, keep, *rng);
            }
            lc.xout.resize(f2.size());
            for (size_t i = 0; i < f2.size(); ++i) {
                lc.xout[i] = lc.xattn[i] + f2[i];
            }
            x = &lc.xout;
        }
        layer_norm(*x, off_lnfg_, off_lnfb_, c.y, c.xhatf, c.istdf, n);
    }

    // Logits over real items 1..V at one position of a filled cache.
    void logits_at(const Cache & c, int pos, std::vector<double> & out) const {
        out.resize(V_);
        const Scalar * y = &c.y[static_cast<size_t>(pos) * H_];
        for (ItemIndex v = 1; v <= V_; ++v) {
            const Scalar * e = &p[off_emb_ + static_cast<size_t>(v) * H_];
            double acc = 0.0;
            for (int h = 0; h < H_; ++h) {
                acc += static_cast<double>(y[h]) * static_cast<double>(e[h]);
            }
            out[v - 1] = acc;
        }
    }

    // Cross-entropy over the item's targets; accumulates scaled gradients.
    double loss_and_grad(const TrainItem & item, Cache & c, double scale,
                         bool training, std::mt19937_64 * rng) {
        forward(item.seq, c, training, rng);
        const int n = c.n;
        std::vector<Scalar> dy(static_cast<size_t>(n) * H_, Scalar(0));
        std::vector<double> logits, probs;
        double loss = 0.0;
        for (const auto & [pos, target] : item.targets) {
            if (pos < 0 || pos >= n || target < 1 || target > V_) {
                throw data_error("BadInput: loss target out of range");
            }
            logits_at(c, pos, logits);
            softmax_inplace(logits, probs);
            loss += -std::log(std::max(probs[target - 1], 1e-300));
            const Scalar * y = &c.y[static_cast<size_t>(pos) * H_];
            Scalar * dyp = &dy[static_cast<size_t>(pos) * H_];
            for (ItemIndex v = 1; v <= V_; ++v) {
                double dl = (probs[v - 1] - (v == target ? 1.0 : 0.0)) * scale;
                if (dl == 0.0) continue;
                const Scalar * e = &p[off_emb_ + static_cast<size_t>(v) * H_];
                Scalar * ge = &g[off_emb_ + static_cast<size_t>(v) * H_];
                for (int h = 0; h < H_; ++h) {
                    dyp[h] += Scalar(dl) * e[h];
                    ge[h] += Scalar(dl) * y[h];
                }
            }
        }
        backward(item.seq, c, dy);
        return loss;
    }

    // Loss without gradients (finite differences).
    double loss_only(const TrainItem & item, Cache & c) const {
        forward(item.seq, c, false, nullptr);
        std::vector<double> logits, probs;
        double loss = 0.0;
        for (const auto & [pos, target] : item.targets) {
            logits_at(c, pos, logits);
            softmax_inplace(logits, probs);
            loss += -std::log(std::max(probs[target - 1], 1e-300));
        }
        return loss;
    }

    // Log-probabilities over 1..V conditioned on the prefix (eval mode).
    std::vector<double> last_logprobs(std::span<const ItemIndex> prefix) const {
        std::span<const ItemIndex> tail = prefix;
        if (static_cast<int>(tail.size()) > P_) {
            tail = tail.subspan(tail.size() - P_);
        }
        Cache c;
        forward(tail, c, false, nullptr);
        std::vector<double> logits, probs;
        logits_at(c, c.n - 1, logits);
        softmax_inplace(logits, probs);
        std::vector<double> out(V_);
        for (ItemIndex v = 1; v <= V_; ++v) {
            out[v - 1] = std::log(std::max(probs[v - 1], 1e-300));
        }
        return out;
    }

    const Scalar * embedding_row(ItemIndex item) const {
        return &p[off_emb_ + static_cast<size_t>(item) * H_];
    }

private:
    struct LayerOffsets {
        size_t ln1g, ln1b, wq, bq, wk, bk, wv, bv, wo, bo, ln2g, ln2b, w1, b1, w2, b2;
    };

    static constexpr double kLnEps = 1e-5;

    void set_zero(size_t off) { std::fill(p.begin() + off, p.begin() + off + H_, Scalar(0)); }
    void set_ones(size_t off) { std::fill(p.begin() + off, p.begin() + off + H_, Scalar(1)); }

    static void softmax_inplace(const std::vector<double> & logits,
                                std::vector<double> & probs) {
        probs.resize(logits.size());
        double mx = *std::max_element(logits.begin(), logits.end());
        double sum = 0.0;
        for (size_t i = 0; i < logits.size(); ++i) {
            probs[i] = std::exp(logits[i] - mx);
            sum += probs[i];
        }
        for (auto & v : probs) {
            v /= sum;
        }
    }

    void apply_dropout(std::vector<Scalar> & x, std::vector<Scalar> & mask, Scalar keep,
                       std::mt19937_64 & rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (size_t i = 0; i < x.size(); ++i) {
            if (u(rng) < static_cast<double>(keep)) {
                mask[i] = Scalar(1) / keep;
            } else {
                mask[i] = Scalar(0);
            }
            x[i] *= mask[i];
        }
    }

    // y = x W + b, W row-major [in][out].
    void linear(const std::vector<Scalar> & x, size_t w_off, size_t b_off,
                std::vector<Scalar> & y, int n, int in, int out) const {
        y.assign(static_cast<size_t>(n) * out, Scalar(0));
        for (int i = 0; i < n; ++i) {
            const Scalar * xi = &x[static_cast<size_t>(i) * in];
            Scalar * yi = &y[static_cast<size_t>(i) * out];
            for (int o = 0; o < out; ++o) {
                yi[o] = p[b_off + o];
            }
            for (int j = 0; j < in; ++j) {
                const Scalar xv = xi[j];
                if (xv == Scalar(0)) continue;
                const Scalar * w = &p[w_off + static_cast<size_t>(j) * out];
                for (int o = 0; o < out; ++o) {
                    yi[o] += xv * w[o];
                }
            }
        }
    }

    void linear_backward(const std::vector<Scalar> & x, size_t w_off, size_t b_off,
                         const std::vector<Scalar> & dy, std::vector<Scalar> & dx,
                         int n, int in, int out) {
        dx.assign(static_cast<size_t>(n) * in, Scalar(0));
        for (int i = 0; i < n; ++i) {
            const Scalar * xi = &x[static_cast<size_t>(i) * in];
            const Scalar * dyi = &dy[static_cast<size_t>(i) * out];
            Scalar * dxi = &dx[static_cast<size_t>(i) * in];
            for (int o = 0; o < out; ++o) {
                g[b_off + o] += dyi[o];
            }
            for (int j = 0; j < in; ++j) {
                const Scalar * w = &p[w_off + static_cast<size_t>(j) * out];
                Scalar * gw = &g[w_off + static_cast<size_t>(j) * out];
                Scalar acc = Scalar(0);
                for (int o = 0; o < out; ++o) {
                    acc += w[o] * dyi[o];
                    gw[o] += xi[j] * dyi[o];
                }
                dxi[j] = acc;
            }
        }
    }

    void layer_norm(const std::vector<Scalar> & x, size_t g_off, size_t b_off,
                    std::vector<Scalar> & y, std::vector<Scalar> & xhat,
                    std::vector<Scalar> & istd, int n) const {
        y.resize(static_cast<size_t>(n) * H_);
        xhat.resize(static_cast<size_t>(n) * H_);
        istd.resize(n);
        for (int i = 0; i < n; ++i) {
            const Scalar * xi = &x[static_cast<size_t>(i) * H_];
            Scalar mu = Scalar(0);
            for (int h = 0; h < H_; ++h) mu += xi[h];
            mu /= Scalar(H_);
            Scalar var = Scalar(0);
            for (int h = 0; h < H_; ++h) {
                Scalar d = xi[h] - mu;
                var += d * d;
            }
            var /= Scalar(H_);
            Scalar is = Scalar(1) / std::sqrt(var + Scalar(kLnEps));
            istd[i] = is;
            Scalar * xh = &xhat[static_cast<size_t>(i) * H_];
            Scalar * yi = &y[static_cast<size_t>(i) * H_];
            for (int h = 0; h < H_; ++h) {
                xh[h] = (xi[h] - mu) * is;
                yi[h] = p[g_off + h] * xh[h] + p[b_off + h];
            }
        }
    }

    void layer_norm_backward(const std::vector<Scalar> & dy,
                             const std::vector<Scalar> & xhat,
                             const std::vector<Scalar> & istd, size_t g_off,
                             size_t b_off, std::vector<Scalar> & dx, int n) {
        dx.assign(static_cast<size_t>(n) * H_, Scalar(0));
        for (int i = 0; i < n; ++i) {
            const Scalar * dyi = &dy[static_cast<size_t>(i) * H_];
            const Scalar * xh = &xhat[static_cast<size_t>(i) * H_];
            Scalar * dxi = &dx[static_cast<size_t>(i) * H_];
            Scalar m1 = Scalar(0), m2 = Scalar(0);
            for (int h = 0; h < H_; ++h) {
                Scalar dxh = dyi[h] * p[g_off + h];
                g[g_off + h] += dyi[h] * xh[h];
                g[b_off + h] += dyi[h];
                m1 += dxh;
                m2 += dxh * xh[h];
            }
            m1 /= Scalar(H_);
            m2 /= Scalar(H_);
            for (int h = 0; h < H_; ++h) {
                Scalar dxh = dyi[h] * p[g_off + h];
                dxi[h] = istd[i] * (dxh - m1 - xh[h] * m2);
            }
        }
    }

    void attention_forward(typename Cache::Layer & lc, int n) const {
        const Scalar inv_sqrt = Scalar(1.0 / std::sqrt(static_cast<double>(DH_)));
        lc.att.assign(static_cast<size_t>(NH_) * n * n, Scalar(0));
        lc.ctx.assign(static_cast<size_t>(n) * H_, Scalar(0));
        std::vector<Scalar> row(n);
        for (int hh = 0; hh < NH_; ++hh) {
            const int hoff = hh * DH_;
            for (int i = 0; i < n; ++i) {
                const Scalar * qi = &lc.q[static_cast<size_t>(i) * H_ + hoff];
                Scalar mx = -std::numeric_limits<Scalar>::infinity();
                for (int j = 0; j <= i; ++j) {
                    const Scalar * kj = &lc.k[static_cast<size_t>(j) * H_ + hoff];
                    Scalar s = Scalar(0);
                    for (int d = 0; d < DH_; ++d) s += qi[d] * kj[d];
                    s *= inv_sqrt;
                    row[j] = s;
                    mx = std::max(mx, s);
                }
                Scalar sum = Scalar(0);
                for (int j = 0; j <= i; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    sum += row[j];
                }
                Scalar * arow = &lc.att[(static_cast<size_t>(hh) * n + i) * n];
                Scalar * cxi = &lc.ctx[static_cast<size_t>(i) * H_ + hoff];
                for (int j = 0; j <= i; ++j) {
                    const Scalar w = row[j] / sum;
                    arow[j] = w;
                    const Scalar * vj = &lc.v[static_cast<size_t>(j) * H_ + hoff];
                    for (int d = 0; d < DH_; ++d) cxi[d] += w * vj[d];
                }
            }
        }
    }

    void attention_backward(const typename Cache::Layer & lc,
                            const std::vector<Scalar> & dctx,
                            std::vector<Scalar> & dq, std::vector<Scalar> & dk,
                            std::vector<Scalar> & dv, int n) {
        const Scalar inv_sqrt = Scalar(1.0 / std::sqrt(static_cast<double>(DH_)));
        dq.assign(static_cast<size_t>(n) * H_, Scalar(0));
        dk.assign(static_cast<size_t>(n) * H_, Scalar(0));
        dv.assign(static_cast<size_t>(n) * H_, Scalar(0));
        std::vector<Scalar> datt(n), ds(n);
        for (int hh = 0; hh < NH_; ++hh) {
            const int hoff = hh * DH_;
            for (int i = 0; i < n; ++i) {
                const Scalar * arow = &lc.att[(static_cast<size_t>(hh) * n + i) * n];
                const Scalar * dci = &dctx[static_cast<size_t>(i) * H_ + hoff];
                Scalar dot = Scalar(0);
                for (int j = 0; j <= i; ++j) {
                    const Scalar * vj = &lc.v[static_cast<size_t>(j) * H_ + hoff];
                    Scalar da = Scalar(0);
                    for (int d = 0; d < DH_; ++d) {
                        da += dci[d] * vj[d];
                        dv[static_cast<size_t>(j) * H_ + hoff + d] += arow[j] * dci[d];
                    }
                    datt[j] = da;
                    dot += arow[j] * da;
                }
                for (int j = 0; j <= i; ++j) {
                    ds[j] = arow[j] * (datt[j] - dot) * inv_sqrt;
                }
                const Scalar * qi = &lc.q[static_cast<size_t>(i) * H_ + hoff];
                Scalar * dqi = &dq[static_cast<size_t>(i) * H_ + hoff];
                for (int j = 0; j <= i; ++j) {
                    const Scalar * kj = &lc.k[static_cast<size_t>(j) * H_ + hoff];
                    Scalar * dkj = &dk[static_cast<size_t>(j) * H_ + hoff];
                    for (int d = 0; d < DH_; ++d) {
                        dqi[d] += ds[j] * kj[d];
                        dkj[d] += ds[j] * qi[d];
                    }
                }
            }
        }
    }

    void backward(std::span<const ItemIndex> seq, Cache & c, std::vector<Scalar> & dy) {
        const int n = c.n;
        std::vector<Scalar> dx;
        const std::vector<Scalar> & xlast = L_ > 0 ? c.layer[L_ - 1].xout : c.x0;
        (void)xlast;
        layer_norm_backward(dy, c.xhatf, c.istdf, off_lnfg_, off_lnfb_, dx, n);

        std::vector<Scalar> dxattn, df2, df1, db, dao, dctx, dq, dk, dv, da, tmp;
        for (int l = L_ - 1; l >= 0; --l) {
            auto & lc = c.layer[l];
            const auto & lo = layers_[l];

            // FFN block: xout = xattn + d2 o (relu(b W1 + b1) W2 + b2)
            df2.resize(dx.size());
            for (size_t i = 0; i < dx.size(); ++i) {
                df2[i] = dx[i] * lc.d2[i];
            }
            linear_backward(lc.f1, lo.w2, lo.b2, df2, df1, n, F_, H_);
            for (size_t i = 0; i < df1.size(); ++i) {
                if (lc.f1[i] <= Scalar(0)) df1[i] = Scalar(0);
            }
            linear_backward(lc.b, lo.w1, lo.b1, df1, db, n, H_, F_);
            layer_norm_backward(db, lc.xhat2, lc.istd2, lo.ln2g, lo.ln2b, dxattn, n);
            for (size_t i = 0; i < dx.size(); ++i) {
                dxattn[i] += dx[i];
            }

            // Attention block: xattn = xin + d1 o ((att v) Wo + bo)
            dao.resize(dxattn.size());
            for (size_t i = 0; i < dxattn.size(); ++i) {
                dao[i] = dxattn[i] * lc.d1[i];
            }
            linear_backward(lc.ctx, lo.wo, lo.bo, dao, dctx, n, H_, H_);
            attention_backward(lc, dctx, dq, dk, dv, n);
            linear_backward(lc.a, lo.wq, lo.bq, dq, da, n, H_, H_);
            linear_backward(lc.a, lo.wk, lo.bk, dk, tmp, n, H_, H_);
            for (size_t i = 0; i < da.size(); ++i) da[i] += tmp[i];
            linear_backward(lc.a, lo.wv, lo.bv, dv, tmp, n, H_, H_);
            for (size_t i = 0; i < da.size(); ++i) da[i] += tmp[i];
            layer_norm_backward(da, lc.xhat1, lc.istd1, lo.ln1g, lo.ln1b, dx, n);
            for (size_t i = 0; i < dx.size(); ++i) {
                dx[i] += dxattn[i];
            }
        }

        // Input: x0 = d0 o (emb[x_i] + pos[i])
        for (int i = 0; i < n; ++i) {
            const Scalar * dxi = &dx[static_cast<size_t>(i) * H_];
            const Scalar * d0i = &c.d0[static_cast<size_t>(i) * H_];
            Scalar * ge = &g[off_emb_ + static_cast<size_t>(seq[i]) * H_];
            Scalar * gp = &g[off_pos_ + static_cast<size_t>(i) * H_];
            for (int h = 0; h < H_; ++h) {
                const Scalar d = dxi[h] * d0i[h];
                ge[h] += d;
                gp[h] += d;
            }
        }
    }

public:
    PredictorConfig cfg_;
    ItemIndex V_;
    int H_, NH_, DH_, F_, L_, P_;
    std::vector<Scalar> p, g;

private:
    size_t off_emb_ = 0, off_pos_ = 0, off_lnfg_ = 0, off_lnfb_ = 0, n_params_ = 0;
    std::vector<LayerOffsets> layers_;
};

// Adam with beta = (0.9, 0.999), eps = 1e-8.
template <typename Scalar>
class AdamOptimizer {
public:
    explicit AdamOptimizer(size_t n) : m_(n, Scalar(0)), v_(n, Scalar(0)) {}

    void step(std::vector<Scalar> & p, const std::vector<Scalar> & g, double lr) {
        ++t_;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, t_);
        const double c2 = 1.0 - std::pow(b2, t_);
        for (size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            m_[i] = Scalar(b1 * static_cast<double>(m_[i]) + (1.0 - b1) * gi);
            v_[i] = Scalar(b2 * static_cast<double>(v_[i]) + (1.0 - b2) * gi * gi);
            const double mhat = static_cast<double>(m_[i]) / c1;
            const double vhat = static_cast<double>(v_[i]) / c2;
            p[i] -= Scalar(lr * mhat / (std::sqrt(vhat) + eps));
        }
    }

private:
    std::vector<Scalar> m_, v_;
    int64_t t_ = 0;
};

// The trained predictor handed to decoding and evaluation.
template <typename Scalar>
class TransformerModel : public Predictor {
public:
    TransformerModel(ItemIndex vocab, const PredictorConfig & cfg, uint64_t fingerprint,
                     Role role, std::string domain_name = "")
        : net_(vocab, cfg), fingerprint_(fingerprint), role_(role),
          domain_name_(std::move(domain_name)) {}

    Distribution predict_next(std::span<const ItemIndex> prefix) const override {
        if (prefix.empty()) {
            throw data_error("EmptyInput: predict_next with empty prefix");
        }
        std::vector<double> lp = net_.last_logprobs(prefix);
        std::vector<ItemIndex> support(net_.vocab());
        for (ItemIndex i = 0; i < net_.vocab(); ++i) {
            support[i] = i + 1;
        }
        return distribution_from_logits(lp, std::move(support));
    }

    Role role() const override { return role_; }
    uint64_t catalog_fingerprint() const override { return fingerprint_; }
    ItemIndex vocab_size() const override { return net_.vocab(); }
    const std::string & domain_name() const { return domain_name_; }

    Net<Scalar> & net() { return net_; }
    const Net<Scalar> & net() const { return net_; }
    void set_role(Role role, std::string domain_name) {
        role_ = role;
        domain_name_ = std::move(domain_name);
    }

private:
    Net<Scalar> net_;
    uint64_t fingerprint_;
    Role role_;
    std::string domain_name_;
};

using TransformerModelF = TransformerModel<float>;
using TransformerModelD = TransformerModel<double>;

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// All next-item positions of each sequence (base pretraining objective).
inline std::vector<TrainItem> next_item_tasks(const std::vector<MergedSequence> & seqs,
                                              int max_len) {
    std::vector<TrainItem> items;
    for (const auto & seq : seqs) {
        std::vector<ItemIndex> s = items_of_sequence(seq);
        if (max_len > 0 && static_cast<int>(s.size()) > max_len) {
            s.erase(s.begin(), s.end() - max_len);
        }
        if (s.size() < 2) {
            continue;
        }
        TrainItem item;
        for (size_t i = 0; i + 1 < s.size(); ++i) {
            item.targets.emplace_back(static_cast<int>(i), s[i + 1]);
        }
        item.seq = std::move(s);
        items.push_back(std::move(item));
    }
    return items;
}

// DSP positions of one domain: context is the full mixed prefix, the target is
// the next in-domain item. When holdout is non-null, each sequence's last pair
// becomes a validation instance instead of a training target.
inline std::vector<TrainItem> dsp_tasks(const std::vector<MergedSequence> & seqs,
                                        const DomainCatalog & catalog,
                                        DomainIndex domain, int max_len,
                                        std::vector<EvalInstance> * holdout = nullptr) {
    std::vector<TrainItem> items;
    for (const auto & seq : seqs) {
        auto pairs = extract_dsp_pairs(seq, domain, catalog);
        if (pairs.empty()) {
            continue;
        }
        std::vector<ItemIndex> s = items_of_sequence(seq);
        int offset = 0;
        if (max_len > 0 && static_cast<int>(s.size()) > max_len) {
            offset = static_cast<int>(s.size()) - max_len;
            s.erase(s.begin(), s.begin() + offset);
        }
        if (holdout && pairs.size() >= 2) {
            auto [i, t] = pairs.back();
            pairs.pop_back();
            if (i - offset >= 0) {
                EvalInstance inst;
                inst.user = seq.user;
                inst.context.assign(s.begin(), s.begin() + (i - offset) + 1);
                inst.label = seq.events[t].item;
                inst.label_domain = domain;
                holdout->push_back(std::move(inst));
            }
        }
        TrainItem item;
        for (const auto & [i, t] : pairs) {
            if (i - offset < 0) {
                continue;
            }
            item.targets.emplace_back(i - offset, seq.events[t].item);
        }
        if (item.targets.empty()) {
            continue;
        }
        item.seq = std::move(s);
        items.push_back(std::move(item));
    }
    return items;
}

// Plain next-item tasks over a single domain's own subsequence (the
// "DSA w/o DSP" ablation: adaptation data without cross-domain context).
inline std::vector<TrainItem> single_domain_tasks(const std::vector<MergedSequence> & seqs,
                                                  const DomainCatalog & catalog,
                                                  DomainIndex domain, int max_len) {
    std::vector<MergedSequence> own;
    for (const auto & seq : seqs) {
        UserSequence sub = domain_subsequence(seq, domain, catalog);
        if (sub.events.size() < 2) {
            continue;
        }
        own.push_back(MergedSequence{sub.user, std::move(sub.events)});
    }
    return next_item_tasks(own, max_len);
}

struct TrainControl {
    int epochs = 0;          // 0: use config max_epochs
    bool early_stopping = true;
    // Candidate set for validation ranking; empty means full vocabulary.
    std::vector<ItemIndex> valid_candidates;
};

namespace detail {

inline double ndcg10_of_rank(int rank) {
    return rank <= 10 ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

template <typename Scalar>
double validation_ndcg10(const Net<Scalar> & net, const std::vector<EvalInstance> & val,
                         const std::vector<ItemIndex> & candidates) {
    if (val.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto & inst : val) {
        std::vector<double> lp = net.last_logprobs(inst.context);
        const double target_score = lp[inst.label - 1];
        int rank = 1;
        if (candidates.empty()) {
            for (ItemIndex v = 1; v <= net.vocab(); ++v) {
                if (v == inst.label) continue;
                if (lp[v - 1] > target_score || (lp[v - 1] == target_score && v < inst.label)) {
                    ++rank;
                }
            }
        } else {
            for (ItemIndex v : candidates) {
                if (v == inst.label) continue;
                if (lp[v - 1] > target_score || (lp[v - 1] == target_score && v < inst.label)) {
                    ++rank;
                }
            }
        }
        sum += ndcg10_of_rank(rank);
    }
    return sum / static_cast<double>(val.size());
}

} // namespace detail

// Minimizes cross-entropy over the items' targets. Deterministic given the
// config seed: seeded shuffles, fixed accumulation order, single thread.
template <typename Scalar>
TrainingReport train(Net<Scalar> & net, const std::vector<TrainItem> & items,
                     const std::vector<EvalInstance> & validation = {},
                     const TrainControl & control = {}) {
    if (items.empty()) {
        throw data_error("EmptyInput: no training items");
    }
    const auto & cfg = net.config();
    const int epochs = control.epochs > 0 ? control.epochs : cfg.max_epochs;

    std::mt19937_64 rng(cfg.seed);
    AdamOptimizer<Scalar> adam(net.n_params());
    typename Net<Scalar>::Cache cache;
    TrainingReport report;

    std::vector<size_t> order(items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<Scalar> best_params;
    double best_metric = -1.0;
    int best_epoch = 0;
    int since_best = 0;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end = std::min(order.size(),
                                        start + static_cast<size_t>(cfg.batch_size));
            int64_t batch_targets = 0;
            for (size_t i = start; i < end; ++i) {
                batch_targets += static_cast<int64_t>(items[order[i]].targets.size());
            }
            if (batch_targets == 0) continue;
            net.zero_grad();
            const double scale = 1.0 / static_cast<double>(batch_targets);
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i) {
                batch_loss += net.loss_and_grad(items[order[i]], cache, scale, true, &rng);
            }
            if (!std::isfinite(batch_loss)) {
                throw numeric_error("DivergedLoss: non-finite training loss");
            }
            loss_sum += batch_loss;
            loss_count += batch_targets;
            adam.step(net.p, net.g, cfg.lr);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        if (!validation.empty()) {
            rec.valid_metric = detail::validation_ndcg10(net, validation,
                                                         control.valid_candidates);
            if (rec.valid_metric > best_metric) {
                best_metric = rec.valid_metric;
                best_params = net.p;
                best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        }
        report.epochs.push_back(rec);
        report.stopping_epoch = epoch;
        if (!validation.empty() && control.early_stopping && since_best >= cfg.patience) {
            break;
        }
    }
    if (!best_params.empty()) {
        net.p = best_params;
        report.stopping_epoch = best_epoch;
    }
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_clock_seconds = std::chrono::duration<double>(t1 - t0).count();
    return report;
}

template <typename Scalar = float>
std::unique_ptr<TransformerModel<Scalar>> train_base(
    const std::vector<MergedSequence> & train_seqs, const DomainCatalog & catalog,
    const PredictorConfig & cfg, const std::vector<EvalInstance> & validation = {},
    TrainingReport * report_out = nullptr, const TrainControl & control = {}) {
    auto model = std::make_unique<TransformerModel<Scalar>>(
        catalog.num_items(), cfg, catalog.fingerprint(), Role::Base);
    model->net().init(cfg.seed);
    auto items = next_item_tasks(train_seqs, cfg.max_len);
    TrainingReport report = train(model->net(), items, validation, control);
    if (report_out) {
        *report_out = report;
    }
    return model;
}

struct AdaptOptions {
    bool from_base = true;   // false: fresh initialization ("w/o DSA")
    bool use_dsp = true;     // false: single-domain next-item ("DSA w/o DSP")
    int epochs = -1;         // -1: config max_epochs; 0 allowed (no-op adaptation)
    bool holdout_validation = true;
    bool early_stopping = true;
};

template <typename Scalar = float>
std::unique_ptr<TransformerModel<Scalar>> adapt_domain(
    const TransformerModel<Scalar> & base, const std::vector<MergedSequence> & train_seqs,
    const DomainCatalog & catalog, DomainIndex domain, const PredictorConfig & cfg,
    const AdaptOptions & options = {}, TrainingReport * report_out = nullptr) {
    if (base.role() != Role::Base) {
        throw config_error("BadConfig: adapt_domain requires a base-role model");
    }
    base.check_fingerprint(catalog);
    Role role = domain == catalog.target() ? Role::TargetExpert : Role::SourceExpert;
    auto model = std::make_unique<TransformerModel<Scalar>>(
        catalog.num_items(), cfg, catalog.fingerprint(), role, catalog.name(domain));
    if (options.from_base) {
        model->net().p = base.net().p;
    } else {
        model->net().init(cfg.seed);
    }
    if (options.epochs == 0) {
        return model;
    }

    std::vector<EvalInstance> holdout;
    std::vector<TrainItem> items;
    if (options.use_dsp) {
        items = dsp_tasks(train_seqs, catalog, domain, cfg.max_len,
                          options.holdout_validation ? &holdout : nullptr);
    } else {
        items = single_domain_tasks(train_seqs, catalog, domain, cfg.max_len);
    }
    if (items.empty()) {
        throw data_error("NoPairs: domain '" + catalog.name(domain) +
                         "' has no valid prediction pairs");
    }
    TrainControl control;
    control.epochs = options.epochs;
    control.early_stopping = options.early_stopping;
    control.valid_candidates = catalog.items_of(domain);
    TrainingReport report = train(model->net(), items, holdout, control);
    if (report_out) {
        *report_out = report;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    int checked = 0;
};

// Compares analytic gradients against central finite differences on a random
// parameter subset. Double precision, dropout disabled.
inline GradCheckReport gradient_check(Net<double> & net, const std::vector<TrainItem> & batch,
                                      double epsilon, double tolerance,
                                      int n_samples = 200, uint64_t seed = 1) {
    if (!(epsilon >= 1e-6 && epsilon <= 1e-4)) {
        throw config_error("InvalidArgument: epsilon must be in [1e-6, 1e-4]");
    }
    net.zero_grad();
    Net<double>::Cache cache;
    for (const auto & item : batch) {
        net.loss_and_grad(item, cache, 1.0, false, nullptr);
    }
    std::vector<double> analytic = net.g;

    auto total_loss = [&]() {
        double loss = 0.0;
        for (const auto & item : batch) {
            loss += net.loss_only(item, cache);
        }
        return loss;
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, net.n_params() - 1);
    GradCheckReport report;
    for (int s = 0; s < n_samples; ++s) {
        const size_t idx = pick(rng);
        const double orig = net.p[idx];
        net.p[idx] = orig + epsilon;
        const double lp = total_loss();
        net.p[idx] = orig - epsilon;
        const double lm = total_loss();
        net.p[idx] = orig;
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double ga = analytic[idx];
        const double denom = std::max({std::abs(ga), std::abs(numeric), 1e-8});
        report.max_rel_err = std::max(report.max_rel_err, std::abs(ga - numeric) / denom);
        ++report.checked;
    }
    if (report.max_rel_err > tolerance) {
        throw numeric_error("CheckFailed: gradient max relative error " +
                            std::to_string(report.max_rel_err) + " exceeds tolerance");
    }
    return report;
}

} // namespace taesar
