// One (N+1)th-price auction, then the win-probability and payment curves a
// bidder sees under a mean-field belief.
//
// cargo run --example auction_round

use edgesched::market::{run_auction, BidDistribution, BidSet, MarketCurves};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> edgesched::Result<MarketCurves> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bids = [(0, 3.0), (1, 1.5), (2, 4.5), (3, 1.5), (4, 0.5), (5, 2.0)];
    let result = run_auction(&bids, 2, &mut rng);
    println!("winners {:?} each pay {}", result.winners, result.price);

    let set = BidSet::uniform(0.0, 5.0, 11);
    let belief = BidDistribution::uniform(set);
    let curves = MarketCurves::from_belief(&belief, 6, 2);
    println!("{:>6} {:>8} {:>8}", "bid", "p_win", "E[pay]");
    for i in 0..curves.len() {
        println!("{:>6.2} {:>8.4} {:>8.4}", curves.bids[i], curves.p_win[i], curves.pay[i]);
    }
    Ok(curves)
}

fn main() -> edgesched::Result<()> {
    run_example().map(|_| ())
}
