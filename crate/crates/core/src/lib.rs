pub mod gauss;
pub mod pbw;
pub mod rank;
pub mod series;
pub mod suite;
pub mod theta;
pub mod torus;
pub mod zakmod;
