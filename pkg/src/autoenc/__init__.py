"""Vanilla VAE and transparent VAE (alpha as a latent perturbation)."""
